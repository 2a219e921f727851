#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "autoedit/environment.hpp"
#include "autoedit/nets.hpp"
#include "autoedit/reward.hpp"

namespace autoedit {

struct TrajectoryStep {
    LatentState state;
    StepAction action;
    double behavior_logp = 0.0;      // summed over heads, at collection time
    std::vector<Vec> behavior_dists; // per-head probabilities at collection
    std::vector<Vec> ref_dists;      // frozen Phase-1 distributions at this state
    double value = 0.0;
};

// One PPO rollout: exactly T steps plus the terminal reward.
struct Trajectory {
    std::vector<TrajectoryStep> steps;
    RewardBreakdown reward;
    Vec final_x0;
    int inversion_step = 0;
    std::int64_t nfe = 0;
};

struct PpoConfig {
    double gamma = 0.999;
    double lam = 0.95;
    double clip_eps = 0.2;
    double kl_coeff = 0.02;
    double lr = 5e-5;
    int episodes = 2500;
    int batch_episodes = 8;
    int epochs_per_batch = 1;
    bool alg2_literal = false;
    bool normalize_advantages = true;
};

void validate_ppo_config(const PpoConfig& cfg);

struct GaeResult {
    Vec advantages;
    Vec returns;
};

// Terminal-only-reward GAE computed backward from the final denoising step;
// alg2_literal reproduces the published recursion (reward in every delta,
// terminal value taken as 0).
GaeResult compute_gae(const Vec& values, double reward, const PpoConfig& cfg);

// min(u A, clip(u, 1-eps, 1+eps) A) with u = exp(new_logp - old_logp)
double clipped_surrogate(double new_logp, double old_logp, double advantage,
                         double clip_eps);

// KL(new || ref); zero reference mass under nonzero new mass is an error
double categorical_kl(const Vec& new_probs, const Vec& ref_probs);

// sum over steps and heads, averaged per step; dists[step][head]
double kl_to_reference(const std::vector<std::vector<Vec>>& new_dists,
                       const std::vector<std::vector<Vec>>& ref_dists);

double cross_entropy(const Vec& log_probs, int label);

int sample_categorical(const Vec& probs, Rng& rng);

struct Phase1Config {
    int steps = 3000;          // optimizer steps
    int batch_episodes = 4;    // episodes averaged per optimizer step
    double lr = 1e-3;
    PriorConfig prior;
};

// Imitates prior-sampled global schedules: per-step per-head cross-entropy
// on states reached by rolling the environment under the sampled labels.
PolicyParams pretrain_phase1(PolicyParams policy, const HyperSpace& space,
                             const std::vector<EditTask>& tasks,
                             const NoiseSchedule& sched, const Phase1Config& cfg,
                             std::uint64_t seed);

// One policy rollout; samples per-head actions (or argmax when greedy).
// theta1 may be null when reference distributions are not needed.
Trajectory collect_trajectory(const PolicyParams& policy, const PolicyParams* theta1,
                              const ValueParams* value, const EditTask& task,
                              const HyperSpace& space, const NoiseSchedule& sched,
                              const RewardConfig& reward_cfg, Rng& rng, bool greedy);

struct MetricsRow {
    int episode = 0;
    double reward_total = 0.0;
    double r_edit = 0.0;
    double r_noedit = 0.0;
    double kl = 0.0;
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double mean_inversion_step = 0.0;
};

void write_metrics(const std::string& path, const std::vector<MetricsRow>& rows,
                   const std::string& config_hash, std::uint64_t seed);

struct TrainResult {
    PolicyParams policy;
    ValueParams value;
    std::vector<MetricsRow> metrics;
};

// Clipped-surrogate PPO with per-step KL regularization toward the frozen
// theta1 and squared-error value regression; one metrics row per episode.
// Callers normally pass theta2 = theta1 (online learning starts from the
// pretrained policy).
TrainResult train_phase2(PolicyParams theta2, const PolicyParams& theta1,
                         ValueParams value, const std::vector<EditTask>& tasks,
                         const HyperSpace& space, const NoiseSchedule& sched,
                         const RewardConfig& reward_cfg, const PpoConfig& cfg,
                         std::uint64_t seed);

}  // namespace autoedit
