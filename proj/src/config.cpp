#include "autoedit/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "autoedit/errors.hpp"
#include "autoedit/serialize.hpp"

namespace autoedit {

namespace {

struct Entry {
    std::string key;
    std::vector<std::string> tokens;
};

struct Section {
    std::string name;
    std::vector<Entry> entries;
};

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

std::vector<Section> parse_sections(const std::string& text) {
    std::vector<Section> sections;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config line " + std::to_string(lineno) +
                                  ": unterminated section header");
            sections.push_back({trim(line.substr(1, line.size() - 2)), {}});
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": expected key = value");
        if (sections.empty())
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": entry outside any section");
        Entry entry;
        entry.key = trim(line.substr(0, eq));
        std::istringstream vals(line.substr(eq + 1));
        std::string tok;
        while (vals >> tok) entry.tokens.push_back(tok);
        if (entry.key.empty() || entry.tokens.empty())
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": empty key or value");
        sections.back().entries.push_back(std::move(entry));
    }
    return sections;
}

double parse_double(const std::string& tok, const std::string& where) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(tok, &pos);
        if (pos != tok.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("cannot parse number '" + tok + "' in " + where);
    }
}

std::int64_t parse_int(const std::string& tok, const std::string& where) {
    try {
        std::size_t pos = 0;
        const std::int64_t v = std::stoll(tok, &pos);
        if (pos != tok.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("cannot parse integer '" + tok + "' in " + where);
    }
}

bool parse_bool(const std::string& tok, const std::string& where) {
    if (tok == "true" || tok == "1") return true;
    if (tok == "false" || tok == "0") return false;
    throw ConfigError("cannot parse boolean '" + tok + "' in " + where);
}

class EntryReader {
public:
    EntryReader(const Section& section) : section_(section) {}

    const Entry* find(const std::string& key) const {
        for (const auto& e : section_.entries)
            if (e.key == key) return &e;
        return nullptr;
    }

    void mark_known(const std::string& key) { known_.push_back(key); }

    double scalar(const std::string& key, double fallback) {
        mark_known(key);
        const Entry* e = find(key);
        if (!e) return fallback;
        expect_tokens(*e, 1);
        return parse_double(e->tokens[0], context(key));
    }

    std::int64_t integer(const std::string& key, std::int64_t fallback) {
        mark_known(key);
        const Entry* e = find(key);
        if (!e) return fallback;
        expect_tokens(*e, 1);
        return parse_int(e->tokens[0], context(key));
    }

    bool boolean(const std::string& key, bool fallback) {
        mark_known(key);
        const Entry* e = find(key);
        if (!e) return fallback;
        expect_tokens(*e, 1);
        return parse_bool(e->tokens[0], context(key));
    }

    std::string word(const std::string& key, const std::string& fallback) {
        mark_known(key);
        const Entry* e = find(key);
        if (!e) return fallback;
        expect_tokens(*e, 1);
        return e->tokens[0];
    }

    std::pair<double, double> range(const std::string& key, double lo, double hi) {
        mark_known(key);
        const Entry* e = find(key);
        if (!e) return {lo, hi};
        expect_tokens(*e, 2);
        return {parse_double(e->tokens[0], context(key)),
                parse_double(e->tokens[1], context(key))};
    }

    std::vector<double> scalars(const std::string& key) {
        mark_known(key);
        const Entry* e = find(key);
        if (!e) return {};
        std::vector<double> out;
        for (const auto& tok : e->tokens) out.push_back(parse_double(tok, context(key)));
        return out;
    }

    std::vector<int> integers(const std::string& key, std::vector<int> fallback) {
        mark_known(key);
        const Entry* e = find(key);
        if (!e) return fallback;
        std::vector<int> out;
        for (const auto& tok : e->tokens)
            out.push_back(static_cast<int>(parse_int(tok, context(key))));
        return out;
    }

    void reject_unknown() const {
        for (const auto& e : section_.entries)
            if (std::find(known_.begin(), known_.end(), e.key) == known_.end())
                throw ConfigError("unknown key '" + e.key + "' in section [" +
                                  section_.name + "]");
    }

private:
    std::string context(const std::string& key) const {
        return "[" + section_.name + "] " + key;
    }

    void expect_tokens(const Entry& e, std::size_t n) const {
        if (e.tokens.size() != n)
            throw ConfigError(context(e.key) + ": expected " + std::to_string(n) +
                              " value(s)");
    }

    const Section& section_;
    std::vector<std::string> known_;
};

HeadSpec parse_head(const Section& section) {
    EntryReader reader(section);
    HeadSpec head;
    head.name = trim(section.name.substr(4));
    if (head.name.empty()) throw ConfigError("head section needs a name: [head <name>]");
    head.kind = head_kind_from_name(reader.word("kind", "discrete_scalar"));
    head.values = reader.scalars("values");
    head.default_index = static_cast<int>(reader.integer("default_index", 0));
    reader.reject_unknown();
    if (head.values.empty()) throw ConfigError("head '" + head.name + "' needs values");
    return head;
}

// canonical re-serialization of the structural sections; formatting and
// comments never affect the hash
std::string structural_canonical(const ExperimentConfig& cfg) {
    std::ostringstream out;
    out << "schedule.T=" << cfg.T << "\n";
    const GenConfig& g = cfg.gen;
    out << "generator.D=" << g.D << "\n"
        << "generator.mask_frac=" << format_double(g.mask_frac_lo) << " "
        << format_double(g.mask_frac_hi) << "\n"
        << "generator.src=" << format_double(g.src_lo) << " " << format_double(g.src_hi)
        << "\n"
        << "generator.edit=" << format_double(g.edit_lo) << " " << format_double(g.edit_hi)
        << "\n"
        << "generator.drift_delta=" << format_double(g.drift_delta_lo) << " "
        << format_double(g.drift_delta_hi) << "\n"
        << "generator.leak=" << format_double(g.leak_lo) << " " << format_double(g.leak_hi)
        << "\n"
        << "generator.kappa=" << format_double(g.kappa_lo) << " "
        << format_double(g.kappa_hi) << "\n"
        << "generator.gate_damp=" << format_double(g.gate_damp_lo) << " "
        << format_double(g.gate_damp_hi) << "\n"
        << "generator.gate_suppress=" << format_double(g.gate_suppress_lo) << " "
        << format_double(g.gate_suppress_hi) << "\n"
        << "generator.global_mask=" << (g.global_mask ? "true" : "false") << "\n";
    for (const auto& head : cfg.space.heads) {
        out << "head." << head.name << ".kind=" << head_kind_name(head.kind) << "\n"
            << "head." << head.name << ".values=";
        for (std::size_t i = 0; i < head.values.size(); ++i)
            out << (i ? " " : "") << format_double(head.values[i]);
        out << "\n"
            << "head." << head.name << ".default_index=" << head.default_index << "\n";
    }
    return out.str();
}

}  // namespace

std::string to_hex(std::uint64_t value) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = digits[value & 0xf];
        value >>= 4;
    }
    return out;
}

ExperimentConfig parse_config(const std::string& text) {
    const std::vector<Section> sections = parse_sections(text);
    ExperimentConfig cfg;
    bool any_head = false;

    for (const auto& section : sections) {
        if (section.name == "schedule") {
            EntryReader r(section);
            cfg.T = static_cast<int>(r.integer("T", cfg.T));
            r.reject_unknown();
            if (cfg.T < 1) throw ConfigError("schedule T must be >= 1");
        } else if (section.name == "generator") {
            EntryReader r(section);
            GenConfig& g = cfg.gen;
            g.D = static_cast<int>(r.integer("D", g.D));
            std::tie(g.mask_frac_lo, g.mask_frac_hi) =
                r.range("mask_frac", g.mask_frac_lo, g.mask_frac_hi);
            std::tie(g.src_lo, g.src_hi) = r.range("src", g.src_lo, g.src_hi);
            std::tie(g.edit_lo, g.edit_hi) = r.range("edit", g.edit_lo, g.edit_hi);
            std::tie(g.drift_delta_lo, g.drift_delta_hi) =
                r.range("drift_delta", g.drift_delta_lo, g.drift_delta_hi);
            std::tie(g.leak_lo, g.leak_hi) = r.range("leak", g.leak_lo, g.leak_hi);
            std::tie(g.kappa_lo, g.kappa_hi) = r.range("kappa", g.kappa_lo, g.kappa_hi);
            std::tie(g.gate_damp_lo, g.gate_damp_hi) =
                r.range("gate_damp", g.gate_damp_lo, g.gate_damp_hi);
            std::tie(g.gate_suppress_lo, g.gate_suppress_hi) =
                r.range("gate_suppress", g.gate_suppress_lo, g.gate_suppress_hi);
            g.global_mask = r.boolean("global_mask", g.global_mask);
            r.reject_unknown();
        } else if (section.name.rfind("head", 0) == 0) {
            cfg.space.heads.push_back(parse_head(section));
            any_head = true;
        } else if (section.name == "reward") {
            EntryReader r(section);
            cfg.reward.mode = reward_mode_from_name(r.word("mode", "masked"));
            cfg.reward.alpha = r.scalar("alpha", cfg.reward.alpha);
            cfg.reward.beta = r.scalar("beta", cfg.reward.beta);
            cfg.reward.judge_coeff = r.scalar("judge_coeff", cfg.reward.judge_coeff);
            cfg.judge_threshold = r.scalar("judge_threshold", cfg.judge_threshold);
            r.reject_unknown();
            if (cfg.reward.alpha < 0.0 || cfg.reward.beta < 0.0)
                throw ConfigError("reward coefficients must be nonnegative");
        } else if (section.name == "phase1") {
            EntryReader r(section);
            cfg.phase1.steps = static_cast<int>(r.integer("steps", cfg.phase1.steps));
            cfg.phase1.lr = r.scalar("lr", cfg.phase1.lr);
            std::tie(cfg.phase1.prior.r_lo_frac, cfg.phase1.prior.r_hi_frac) =
                r.range("r_frac", cfg.phase1.prior.r_lo_frac, cfg.phase1.prior.r_hi_frac);
            std::tie(cfg.phase1.prior.gate_lo, cfg.phase1.prior.gate_hi) =
                r.range("gate_ratio", cfg.phase1.prior.gate_lo, cfg.phase1.prior.gate_hi);
            r.reject_unknown();
            if (cfg.phase1.steps < 1) throw ConfigError("phase1 steps must be >= 1");
            if (cfg.phase1.lr <= 0.0) throw ConfigError("phase1 lr must be positive");
        } else if (section.name == "phase2") {
            EntryReader r(section);
            PpoConfig& p = cfg.ppo;
            p.gamma = r.scalar("gamma", p.gamma);
            p.lam = r.scalar("lam", p.lam);
            p.clip_eps = r.scalar("clip_eps", p.clip_eps);
            p.kl_coeff = r.scalar("kl_coeff", p.kl_coeff);
            p.lr = r.scalar("lr", p.lr);
            p.episodes = static_cast<int>(r.integer("episodes", p.episodes));
            p.batch_episodes = static_cast<int>(r.integer("batch_episodes", p.batch_episodes));
            p.epochs_per_batch =
                static_cast<int>(r.integer("epochs_per_batch", p.epochs_per_batch));
            p.alg2_literal = r.boolean("alg2_literal", p.alg2_literal);
            p.normalize_advantages =
                r.boolean("normalize_advantages", p.normalize_advantages);
            r.reject_unknown();
            validate_ppo_config(p);
        } else if (section.name == "search") {
            EntryReader r(section);
            cfg.trial_counts = r.integers("trial_counts", cfg.trial_counts);
            r.reject_unknown();
            for (int k : cfg.trial_counts)
                if (k < 1) throw ConfigError("trial counts must be positive");
        } else if (section.name == "run") {
            EntryReader r(section);
            cfg.master_seed = static_cast<std::uint64_t>(r.integer("master_seed", 1));
            r.reject_unknown();
        } else {
            throw ConfigError("unknown config section [" + section.name + "]");
        }
    }

    if (!any_head) cfg.space = default_space();
    validate_space(cfg.space);
    validate_gen_config(cfg.gen);
    if (cfg.reward.mode == RewardMode::Judge)
        cfg.reward.judge = make_threshold_judge(cfg.judge_threshold);
    if (cfg.phase1.prior.r_lo_frac < 0.0 || cfg.phase1.prior.r_hi_frac > 1.0 ||
        cfg.phase1.prior.r_lo_frac > cfg.phase1.prior.r_hi_frac)
        throw ConfigError("phase1 r_frac range invalid");
    if (cfg.phase1.prior.gate_lo < 0.0 || cfg.phase1.prior.gate_hi > 1.0 ||
        cfg.phase1.prior.gate_lo > cfg.phase1.prior.gate_hi)
        throw ConfigError("phase1 gate_ratio range invalid");

    cfg.config_hash = to_hex(fnv1a64(structural_canonical(cfg)));
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::uint64_t effective_master_seed(const ExperimentConfig& cfg) {
    if (const char* env = std::getenv("AUTOEDIT_SEED")) {
        try {
            return static_cast<std::uint64_t>(std::stoull(env));
        } catch (const std::exception&) {
            throw ConfigError("AUTOEDIT_SEED is not an integer");
        }
    }
    return cfg.master_seed;
}

std::string default_config_text() {
    return R"([schedule]
T = 10

[generator]
D = 16
mask_frac = 0.25 0.5
src = -1 1
edit = -1 1
drift_delta = -1 1
leak = 0.3 0.7
kappa = 0.27 0.38
gate_damp = 0.7 0.7
gate_suppress = 0 0
global_mask = false

[head prompt]
kind = prompt_switch
values = 0 1
default_index = 1

[head gate]
kind = binary_gate
values = 0 1
default_index = 0

[head scale]
kind = discrete_scalar
values = 0.5 1.0 1.5 2.0 3.0 5.0
default_index = 1

[reward]
mode = masked
alpha = 30
beta = 30

[phase1]
steps = 3000
lr = 1e-3
r_frac = 0.35 0.95
gate_ratio = 0.2 0.8

[phase2]
gamma = 0.999
lam = 0.95
clip_eps = 0.2
kl_coeff = 0.02
lr = 5e-5
episodes = 2500
batch_episodes = 8
epochs_per_batch = 1

[search]
trial_counts = 1 2 3

[run]
master_seed = 1
)";
}

}  // namespace autoedit
