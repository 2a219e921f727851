#include "autoedit/hyperspace.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "autoedit/errors.hpp"

namespace autoedit {

const char* head_kind_name(HeadKind kind) {
    switch (kind) {
        case HeadKind::PromptSwitch: return "prompt_switch";
        case HeadKind::BinaryGate: return "binary_gate";
        case HeadKind::DiscreteScalar: return "discrete_scalar";
    }
    return "?";
}

HeadKind head_kind_from_name(const std::string& name) {
    if (name == "prompt_switch") return HeadKind::PromptSwitch;
    if (name == "binary_gate") return HeadKind::BinaryGate;
    if (name == "discrete_scalar") return HeadKind::DiscreteScalar;
    throw ConfigError("unknown head kind: " + name);
}

int HyperSpace::find_head(HeadKind kind) const {
    for (int k = 0; k < num_heads(); ++k)
        if (heads[k].kind == kind) return k;
    return -1;
}

void validate_space(const HyperSpace& space) {
    if (space.heads.empty()) throw std::invalid_argument("space needs at least one head");
    for (const auto& h : space.heads) {
        const int n = static_cast<int>(h.values.size());
        const int min_n = h.kind == HeadKind::DiscreteScalar ? 1 : 2;
        if (n < min_n)
            throw std::invalid_argument("head '" + h.name + "' has too few values");
        if (h.default_index < 0 || h.default_index >= n)
            throw std::invalid_argument("head '" + h.name + "' default index out of range");
    }
}

bool spaces_equal(const HyperSpace& a, const HyperSpace& b) {
    if (a.heads.size() != b.heads.size()) return false;
    for (std::size_t k = 0; k < a.heads.size(); ++k) {
        const auto& x = a.heads[k];
        const auto& y = b.heads[k];
        if (x.name != y.name || x.kind != y.kind || x.values != y.values ||
            x.default_index != y.default_index)
            return false;
    }
    return true;
}

HyperSpace default_space() {
    HyperSpace s;
    s.heads.push_back({"prompt", HeadKind::PromptSwitch, {0.0, 1.0}, 1});
    s.heads.push_back({"gate", HeadKind::BinaryGate, {0.0, 1.0}, 0});
    s.heads.push_back({"scale", HeadKind::DiscreteScalar, {0.5, 1.0, 1.5, 2.0, 3.0, 5.0}, 1});
    return s;
}

bool action_valid(const HyperSpace& space, const StepAction& action) {
    if (static_cast<int>(action.indices.size()) != space.num_heads()) return false;
    for (int k = 0; k < space.num_heads(); ++k) {
        const int idx = action.indices[k];
        if (idx < 0 || idx >= static_cast<int>(space.heads[k].values.size())) return false;
    }
    return true;
}

StepSemantics interpret(const HyperSpace& space, const StepAction& action) {
    if (!action_valid(space, action))
        throw std::invalid_argument("action does not fit the hyperparameter space");
    StepSemantics sem;
    for (int k = 0; k < space.num_heads(); ++k) {
        const auto& head = space.heads[k];
        const int idx = action.indices[k];
        switch (head.kind) {
            case HeadKind::PromptSwitch: sem.edit_prompt = idx != 0; break;
            case HeadKind::BinaryGate: sem.gate_on = idx != 0; break;
            case HeadKind::DiscreteScalar: sem.scale = head.values[idx]; break;
        }
    }
    return sem;
}

std::vector<StepAction> global_to_perstep(const GlobalConfig& cfg, int T,
                                          const HyperSpace& space) {
    validate_space(space);
    if (cfg.r < 0 || cfg.r > T) throw std::invalid_argument("inversion step r out of 0..T");
    if (cfg.gate_ratio < 0.0 || cfg.gate_ratio > 1.0)
        throw std::invalid_argument("gate ratio out of [0,1]");

    const int gate_steps = static_cast<int>(std::floor(cfg.gate_ratio * T));
    std::vector<StepAction> actions(T);
    for (int k = 0; k < T; ++k) {
        const int t = T - k;
        StepAction a;
        a.indices.resize(space.num_heads());
        for (int h = 0; h < space.num_heads(); ++h) {
            const auto& head = space.heads[h];
            switch (head.kind) {
                case HeadKind::PromptSwitch:
                    a.indices[h] = t <= cfg.r ? 1 : 0;
                    break;
                case HeadKind::BinaryGate:
                    a.indices[h] = k < gate_steps ? 1 : 0;
                    break;
                case HeadKind::DiscreteScalar:
                    if (cfg.scale_index < 0 ||
                        cfg.scale_index >= static_cast<int>(head.values.size()))
                        throw std::invalid_argument("scale index out of range");
                    a.indices[h] = cfg.scale_index;
                    break;
            }
        }
        actions[k] = std::move(a);
    }
    return actions;
}

int perstep_to_inversion_step(const HyperSpace& space,
                              const std::vector<StepAction>& actions) {
    if (actions.empty()) throw std::invalid_argument("empty action sequence");
    const int prompt = space.find_head(HeadKind::PromptSwitch);
    if (prompt < 0) return 0;
    const int T = static_cast<int>(actions.size());
    for (int k = 0; k < T; ++k)
        if (actions[k].indices[prompt] != 0) return T - k;
    return 0;
}

std::pair<int, int> prior_r_support(const PriorConfig& prior, int T) {
    int lo = static_cast<int>(std::ceil(prior.r_lo_frac * T));
    int hi = static_cast<int>(std::floor(prior.r_hi_frac * T));
    lo = std::clamp(lo, 0, T);
    hi = std::clamp(hi, lo, T);
    return {lo, hi};
}

GlobalConfig sample_prior(const HyperSpace& space, int T, const PriorConfig& prior,
                          Rng& rng) {
    if (T < 2) throw std::invalid_argument("sample_prior needs T >= 2");
    validate_space(space);
    const auto [lo, hi] = prior_r_support(prior, T);
    GlobalConfig cfg;
    cfg.r = static_cast<int>(rng.uniform_int(lo, hi));
    cfg.gate_ratio = rng.uniform(prior.gate_lo, prior.gate_hi);
    const int scale = space.find_head(HeadKind::DiscreteScalar);
    cfg.scale_index = scale >= 0 ? space.heads[scale].default_index : 0;
    return cfg;
}

}  // namespace autoedit
