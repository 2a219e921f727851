#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "autoedit/hyperspace.hpp"
#include "autoedit/schedule.hpp"
#include "autoedit/task.hpp"

namespace autoedit {

// Per-episode rollout record. nfe_count tallies one-step denoiser calls —
// the unit of search cost.
struct EpisodeRecord {
    std::vector<LatentState> states;  // pre-action states, t = T down to 1
    Vec final_x0;
    std::int64_t nfe_count = 0;
};

// Closed-form inversion: the latent at t = T whose implied x0 under
// eps_star is exactly i_src.
LatentState invert(const EditTask& task, const NoiseSchedule& sched);

// Pull target and per-coordinate pull weights for one action.
struct PullTarget {
    Vec target;
    Vec weight_mask;
};

PullTarget edit_pull_target(const EditTask& task, const StepSemantics& sem);
PullTarget edit_pull_target(const EditTask& task, const HyperSpace& space,
                            const StepAction& action);

// One denoising step x_{t-1} = g(x_t, t, H_t); bumps *nfe by one.
LatentState denoise_step(const LatentState& x, const EditTask& task,
                         const HyperSpace& space, const StepAction& action,
                         const NoiseSchedule& sched, std::int64_t* nfe);

// Supplies the action for the state at rollout index k (t = T - k).
using ActionProvider = std::function<StepAction(const LatentState& state, int k)>;

// Wraps a fixed action sequence; running out mid-episode is a hard error.
ActionProvider sequence_provider(std::vector<StepAction> actions);

EpisodeRecord rollout(const EditTask& task, const HyperSpace& space,
                      const NoiseSchedule& sched, const ActionProvider& provider);

}  // namespace autoedit
