#include "autoedit/task.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "autoedit/errors.hpp"
#include "autoedit/rng.hpp"

namespace autoedit {

namespace {

using json = nlohmann::ordered_json;

bool all_finite(const Vec& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void check_range(double lo, double hi, const char* what) {
    if (!(std::isfinite(lo) && std::isfinite(hi)) || lo > hi)
        throw ConfigError(std::string("invalid range for ") + what);
}

json vec_to_json(const Vec& v) { return json(v); }

Vec vec_from_json(const json& j) {
    Vec v;
    v.reserve(j.size());
    for (const auto& x : j) v.push_back(x.get<double>());
    return v;
}

}  // namespace

void validate_task(const EditTask& task) {
    const int d = task.dim();
    if (d < 2) throw std::invalid_argument("task dimension must be >= 2");
    if (static_cast<int>(task.c_edit.size()) != d ||
        static_cast<int>(task.drift.size()) != d ||
        static_cast<int>(task.mask.size()) != d ||
        static_cast<int>(task.eps_star.size()) != d)
        throw std::invalid_argument("task field dimensions disagree");
    if (!all_finite(task.i_src) || !all_finite(task.c_edit) || !all_finite(task.drift) ||
        !all_finite(task.eps_star) || !std::isfinite(task.leak_rho) ||
        !std::isfinite(task.pull_kappa))
        throw std::invalid_argument("task contains non-finite values");

    int inside = 0;
    for (double m : task.mask) {
        if (m != 0.0 && m != 1.0) throw std::invalid_argument("mask entries must be 0 or 1");
        if (m == 1.0) ++inside;
    }
    if (inside == 0) throw std::invalid_argument("mask has no edit region");
    // all-ones masks are allowed (global-edit tasks)

    if (task.leak_rho > 0.0 && inside < d) {
        bool differs = false;
        for (int i = 0; i < d; ++i)
            if (task.mask[i] == 0.0 && task.drift[i] != task.i_src[i]) differs = true;
        if (!differs)
            throw std::invalid_argument("leaky task needs drift != i_src outside the mask");
    }
}

Vec edit_target_vector(const EditTask& task) {
    Vec target(task.i_src.size());
    for (std::size_t i = 0; i < target.size(); ++i)
        target[i] = task.mask[i] == 1.0 ? task.c_edit[i] : task.drift[i];
    return target;
}

void validate_gen_config(const GenConfig& cfg) {
    if (cfg.D < 2) throw ConfigError("generator needs D >= 2");
    check_range(cfg.mask_frac_lo, cfg.mask_frac_hi, "mask fraction");
    if (!cfg.global_mask && (cfg.mask_frac_lo <= 0.0 || cfg.mask_frac_hi >= 1.0))
        throw ConfigError("mask fraction must stay inside (0,1)");
    check_range(cfg.src_lo, cfg.src_hi, "source values");
    check_range(cfg.edit_lo, cfg.edit_hi, "edit values");
    check_range(cfg.drift_delta_lo, cfg.drift_delta_hi, "drift delta");
    check_range(cfg.leak_lo, cfg.leak_hi, "leak");
    if (cfg.leak_lo < 0.0 || cfg.leak_hi > 1.0) throw ConfigError("leak outside [0,1]");
    check_range(cfg.kappa_lo, cfg.kappa_hi, "kappa");
    if (cfg.kappa_lo <= 0.0 || cfg.kappa_hi >= 1.0) throw ConfigError("kappa outside (0,1)");
    check_range(cfg.gate_damp_lo, cfg.gate_damp_hi, "gate damp");
    if (cfg.gate_damp_lo <= 0.0 || cfg.gate_damp_hi > 1.0)
        throw ConfigError("gate damp outside (0,1]");
    check_range(cfg.gate_suppress_lo, cfg.gate_suppress_hi, "gate suppress");
    if (cfg.gate_suppress_lo < 0.0 || cfg.gate_suppress_hi > 1.0)
        throw ConfigError("gate suppress outside [0,1]");
    // the off-target drift must be able to differ from the source wherever
    // a leaky task can arise
    if (cfg.leak_hi > 0.0 && !cfg.global_mask && cfg.drift_delta_lo == 0.0 &&
        cfg.drift_delta_hi == 0.0)
        throw ConfigError("leak range is positive but drift delta is pinned at zero");
}

EditTask generate_task(const GenConfig& cfg, std::uint64_t seed) {
    validate_gen_config(cfg);
    Rng rng(splitmix64(seed ^ 0x7a115eedULL));
    const int d = cfg.D;

    EditTask task;
    task.seed = static_cast<std::int64_t>(seed);
    task.i_src.resize(d);
    task.c_edit.resize(d);
    task.drift.resize(d);
    task.mask.assign(d, 0.0);
    task.eps_star.resize(d);

    if (cfg.global_mask) {
        task.mask.assign(d, 1.0);
    } else {
        const double frac = rng.uniform(cfg.mask_frac_lo, cfg.mask_frac_hi);
        int count = static_cast<int>(std::lround(frac * d));
        count = std::clamp(count, 1, d - 1);
        // random subset of size `count`: partial Fisher-Yates over indices
        std::vector<int> idx(d);
        std::iota(idx.begin(), idx.end(), 0);
        for (int i = 0; i < count; ++i) {
            const int j = static_cast<int>(rng.uniform_int(i, d - 1));
            std::swap(idx[i], idx[j]);
            task.mask[idx[i]] = 1.0;
        }
    }

    for (int i = 0; i < d; ++i) task.i_src[i] = rng.uniform(cfg.src_lo, cfg.src_hi);
    for (int i = 0; i < d; ++i) task.c_edit[i] = rng.uniform(cfg.edit_lo, cfg.edit_hi);
    for (int i = 0; i < d; ++i)
        task.drift[i] = task.i_src[i] + rng.uniform(cfg.drift_delta_lo, cfg.drift_delta_hi);
    task.leak_rho = rng.uniform(cfg.leak_lo, cfg.leak_hi);
    task.pull_kappa = rng.uniform(cfg.kappa_lo, cfg.kappa_hi);
    task.gate_damp = rng.uniform(cfg.gate_damp_lo, cfg.gate_damp_hi);
    task.gate_suppress = rng.uniform(cfg.gate_suppress_lo, cfg.gate_suppress_hi);
    for (int i = 0; i < d; ++i) task.eps_star[i] = rng.normal();

    validate_task(task);
    return task;
}

void write_task_file(const std::string& path, const std::vector<EditTask>& tasks,
                     const std::string& config_hash, std::uint64_t seed) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write task file: " + path);

    json header;
    header["format"] = "autoedit-tasks";
    header["version"] = 1;
    header["config_hash"] = config_hash;
    header["seed"] = seed;
    header["count"] = tasks.size();
    out << header.dump() << "\n";

    for (const auto& task : tasks) {
        json rec;
        rec["seed"] = task.seed;
        rec["i_src"] = vec_to_json(task.i_src);
        rec["c_edit"] = vec_to_json(task.c_edit);
        rec["drift"] = vec_to_json(task.drift);
        rec["mask"] = vec_to_json(task.mask);
        rec["leak_rho"] = task.leak_rho;
        rec["pull_kappa"] = task.pull_kappa;
        rec["gate_damp"] = task.gate_damp;
        rec["gate_suppress"] = task.gate_suppress;
        rec["eps_star"] = vec_to_json(task.eps_star);
        out << rec.dump() << "\n";
    }
    if (!out) throw DataError("write failed: " + path);
}

TaskFile read_task_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open task file: " + path);

    TaskFile file;
    std::string line;
    if (!std::getline(in, line)) throw DataError("task file is empty: " + path);

    json header;
    try {
        header = json::parse(line);
    } catch (const json::exception&) {
        throw DataError("task file header is not valid: " + path);
    }
    if (header.value("format", "") != "autoedit-tasks")
        throw DataError("not a task file: " + path);
    file.config_hash = header.value("config_hash", "");
    file.seed = header.value("seed", std::uint64_t{0});
    const std::size_t count = header.value("count", std::size_t{0});

    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::exception&) {
            throw DataError("corrupt task record in " + path);
        }
        EditTask task;
        try {
            task.seed = rec.at("seed").get<std::int64_t>();
            task.i_src = vec_from_json(rec.at("i_src"));
            task.c_edit = vec_from_json(rec.at("c_edit"));
            task.drift = vec_from_json(rec.at("drift"));
            task.mask = vec_from_json(rec.at("mask"));
            task.leak_rho = rec.at("leak_rho").get<double>();
            task.pull_kappa = rec.at("pull_kappa").get<double>();
            task.gate_damp = rec.at("gate_damp").get<double>();
            task.gate_suppress = rec.at("gate_suppress").get<double>();
            task.eps_star = vec_from_json(rec.at("eps_star"));
        } catch (const json::exception&) {
            throw DataError("task record missing fields in " + path);
        }
        try {
            validate_task(task);
        } catch (const std::invalid_argument& e) {
            throw DataError(std::string("invalid task in file: ") + e.what());
        }
        file.tasks.push_back(std::move(task));
    }
    if (file.tasks.size() != count)
        throw DataError("task count mismatch in " + path);
    return file;
}

}  // namespace autoedit
