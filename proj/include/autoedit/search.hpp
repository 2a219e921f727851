#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "autoedit/environment.hpp"
#include "autoedit/reward.hpp"
#include "autoedit/trainer.hpp"

namespace autoedit {

// Global-schedule grid the baselines sweep: every inversion step, a
// gate-ratio lattice, and the scalar value set.
struct SearchGrid {
    std::vector<int> r_values;
    std::vector<double> gate_ratios;
    std::vector<int> scale_indices;

    std::size_t size() const {
        return r_values.size() * gate_ratios.size() * scale_indices.size();
    }
};

// r = 0..T, 11 gate ratios in [0,1], the full scalar set.
SearchGrid default_grid(int T, const HyperSpace& space);
// r = 0..T with gate off and the default scale (the OIR-style sweep).
SearchGrid r_only_grid(int T, const HyperSpace& space);

struct SearchResult {
    GlobalConfig best_config;
    double best_reward = 0.0;
    std::int64_t nfe_count = 0;
    std::vector<std::pair<GlobalConfig, double>> evaluations;
};

// Exhaustive sweep; ties resolve to the earliest config in grid order.
SearchResult brute_force(const EditTask& task, const HyperSpace& space,
                         const NoiseSchedule& sched, const SearchGrid& grid,
                         const RewardConfig& reward_cfg);

// Uniform draws without replacement (seeded shuffle prefix), so a budget of
// the full grid size recovers the brute-force optimum.
SearchResult random_search(const EditTask& task, const HyperSpace& space,
                           const NoiseSchedule& sched, const SearchGrid& grid,
                           const RewardConfig& reward_cfg, int budget_configs,
                           std::uint64_t seed);

struct PolicyEvaluation {
    RewardBreakdown reward;
    Trajectory trajectory;
    std::int64_t nfe_count = 0;
};

// Greedy (argmax-per-head) rollout by default; costs exactly T evaluations.
PolicyEvaluation evaluate_policy(const PolicyParams& policy, const EditTask& task,
                                 const HyperSpace& space, const NoiseSchedule& sched,
                                 const RewardConfig& reward_cfg, bool greedy = true,
                                 std::uint64_t seed = 0);

struct CompareRow {
    std::string label;  // task id or "aggregate"
    double reward_default = 0.0;
    std::vector<double> reward_best_of;  // best of k random trials, k = 1..
    double reward_policy = 0.0;
    double reward_optimal = 0.0;
    std::int64_t nfe_default = 0;
    std::vector<std::int64_t> nfe_best_of;
    std::int64_t nfe_policy = 0;
    std::int64_t nfe_optimal = 0;
    bool policy_exceeds_grid = false;  // per-step schedules can beat global ones
};

struct CompareTable {
    std::vector<int> trial_counts;  // the k values of the best-of columns
    std::vector<CompareRow> rows;   // one per task
    CompareRow aggregate;           // mean rewards, summed NFE
};

// Default config / best-of-k random trials / policy / grid optimum, with
// exact NFE accounting per column.
CompareTable compare(const PolicyParams& policy, const std::vector<EditTask>& tasks,
                     const HyperSpace& space, const NoiseSchedule& sched,
                     const SearchGrid& grid, const RewardConfig& reward_cfg,
                     const std::vector<int>& trial_counts, std::uint64_t seed);

void write_compare_table(const std::string& path, const CompareTable& table,
                         const std::string& config_hash, std::uint64_t seed);
void write_compare_json(const std::string& path, const CompareTable& table,
                        const std::string& config_hash, std::uint64_t seed);

}  // namespace autoedit
