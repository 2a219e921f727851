#include "autoedit/reward.hpp"

#include <algorithm>
#include <stdexcept>

#include "autoedit/errors.hpp"

namespace autoedit {

const char* reward_mode_name(RewardMode mode) {
    switch (mode) {
        case RewardMode::Masked: return "masked";
        case RewardMode::Global: return "global";
        case RewardMode::Judge: return "judge";
    }
    return "?";
}

RewardMode reward_mode_from_name(const std::string& name) {
    if (name == "masked") return RewardMode::Masked;
    if (name == "global") return RewardMode::Global;
    if (name == "judge") return RewardMode::Judge;
    throw ConfigError("unknown reward mode: " + name);
}

JudgePredicate make_threshold_judge(double threshold) {
    return [threshold](const Vec& x0_edit, const EditTask& task) {
        return in_mask_mse(x0_edit, task) < threshold;
    };
}

namespace {

void check_dims(const Vec& x0_edit, const EditTask& task) {
    if (static_cast<int>(x0_edit.size()) != task.dim())
        throw std::invalid_argument("edited latent dimension mismatch");
}

}  // namespace

double in_mask_mse(const Vec& x0_edit, const EditTask& task) {
    check_dims(x0_edit, task);
    double sum = 0.0;
    int n = 0;
    for (int i = 0; i < task.dim(); ++i) {
        if (task.mask[i] != 1.0) continue;
        const double d = x0_edit[i] - task.c_edit[i];
        sum += d * d;
        ++n;
    }
    if (n == 0) throw std::invalid_argument("task mask has no edit region");
    return sum / n;
}

double out_of_mask_mse(const Vec& x0_edit, const EditTask& task) {
    check_dims(x0_edit, task);
    double sum = 0.0;
    int n = 0;
    for (int i = 0; i < task.dim(); ++i) {
        if (task.mask[i] != 0.0) continue;
        const double d = x0_edit[i] - task.i_src[i];
        sum += d * d;
        ++n;
    }
    return n == 0 ? 0.0 : sum / n;
}

double background_reward(const Vec& x0_edit, const EditTask& task) {
    return -out_of_mask_mse(x0_edit, task);
}

double alignment_reward(const Vec& x0_edit, const EditTask& task) {
    return 1.0 / (1.0 + in_mask_mse(x0_edit, task));
}

RewardBreakdown compose(const Vec& x0_edit, const EditTask& task, const RewardConfig& cfg) {
    if (cfg.alpha < 0.0 || cfg.beta < 0.0)
        throw ConfigError("reward coefficients must be nonnegative");

    const bool has_outside =
        std::any_of(task.mask.begin(), task.mask.end(), [](double m) { return m == 0.0; });

    RewardBreakdown out;
    switch (cfg.mode) {
        case RewardMode::Masked:
            if (!has_outside)
                throw DataError("masked reward on a global-mask task (no outside region)");
            out.r_edit = alignment_reward(x0_edit, task);
            out.r_noedit = background_reward(x0_edit, task);
            out.total = cfg.alpha * out.r_edit + cfg.beta * out.r_noedit;
            return out;
        case RewardMode::Global:
            out.r_edit = alignment_reward(x0_edit, task);
            out.r_noedit = 0.0;
            out.total = cfg.alpha * out.r_edit;
            return out;
        case RewardMode::Judge:
            return judge_score(x0_edit, task, cfg);
    }
    throw std::invalid_argument("unreachable reward mode");
}

RewardBreakdown judge_score(const Vec& x0_edit, const EditTask& task,
                            const RewardConfig& cfg) {
    if (!cfg.judge) throw ConfigError("judge reward mode needs a judge predicate");
    RewardBreakdown out;
    out.r_edit = cfg.judge(x0_edit, task) ? 1.0 : 0.0;
    out.r_noedit = std::max(0.0, 1.0 - cfg.judge_coeff * out_of_mask_mse(x0_edit, task));
    out.total = out.r_edit + out.r_noedit;
    return out;
}

}  // namespace autoedit
