#pragma once

#include <functional>
#include <string>

#include "autoedit/task.hpp"

namespace autoedit {

enum class RewardMode { Masked, Global, Judge };

const char* reward_mode_name(RewardMode mode);
RewardMode reward_mode_from_name(const std::string& name);

using JudgePredicate = std::function<bool(const Vec& x0_edit, const EditTask& task)>;

// Edit-success predicate used by the judge reward: in-mask MSE under a
// threshold counts as a correct edit.
JudgePredicate make_threshold_judge(double threshold);

struct RewardConfig {
    double alpha = 30.0;
    double beta = 30.0;
    RewardMode mode = RewardMode::Masked;
    double judge_coeff = 5.0;
    JudgePredicate judge;  // required iff mode == Judge
};

struct RewardBreakdown {
    double r_edit = 0.0;
    double r_noedit = 0.0;
    double total = 0.0;
};

// -MSE over the out-of-mask region; 0 for all-ones masks (global mode).
double background_reward(const Vec& x0_edit, const EditTask& task);

// Surrogate alignment score 1/(1 + in-mask MSE to c_edit), in (0, 1].
double alignment_reward(const Vec& x0_edit, const EditTask& task);

double in_mask_mse(const Vec& x0_edit, const EditTask& task);
double out_of_mask_mse(const Vec& x0_edit, const EditTask& task);

RewardBreakdown compose(const Vec& x0_edit, const EditTask& task, const RewardConfig& cfg);

// Judge-mode score: edit success in {0,1} plus max(0, 1 - coeff * out-MSE).
RewardBreakdown judge_score(const Vec& x0_edit, const EditTask& task,
                            const RewardConfig& cfg);

}  // namespace autoedit
