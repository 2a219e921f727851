#include "autoedit/search.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "autoedit/errors.hpp"
#include "autoedit/serialize.hpp"

namespace autoedit {

namespace {

using json = nlohmann::ordered_json;

GlobalConfig grid_config(const SearchGrid& grid, std::size_t flat_index) {
    const std::size_t n_scale = grid.scale_indices.size();
    const std::size_t n_gate = grid.gate_ratios.size();
    GlobalConfig cfg;
    cfg.scale_index = grid.scale_indices[flat_index % n_scale];
    flat_index /= n_scale;
    cfg.gate_ratio = grid.gate_ratios[flat_index % n_gate];
    flat_index /= n_gate;
    cfg.r = grid.r_values[flat_index];
    return cfg;
}

double evaluate_config(const EditTask& task, const HyperSpace& space,
                       const NoiseSchedule& sched, const GlobalConfig& cfg,
                       const RewardConfig& reward_cfg, std::int64_t& nfe) {
    const auto actions = global_to_perstep(cfg, sched.T, space);
    const EpisodeRecord episode = rollout(task, space, sched, sequence_provider(actions));
    nfe += episode.nfe_count;
    return compose(episode.final_x0, task, reward_cfg).total;
}

}  // namespace

SearchGrid default_grid(int T, const HyperSpace& space) {
    SearchGrid grid;
    grid.r_values.resize(T + 1);
    std::iota(grid.r_values.begin(), grid.r_values.end(), 0);
    for (int i = 0; i <= 10; ++i) grid.gate_ratios.push_back(i / 10.0);
    const int scale = space.find_head(HeadKind::DiscreteScalar);
    if (scale >= 0) {
        const int n = static_cast<int>(space.heads[scale].values.size());
        grid.scale_indices.resize(n);
        std::iota(grid.scale_indices.begin(), grid.scale_indices.end(), 0);
    } else {
        grid.scale_indices = {0};
    }
    if (space.find_head(HeadKind::BinaryGate) < 0) grid.gate_ratios = {0.0};
    return grid;
}

SearchGrid r_only_grid(int T, const HyperSpace& space) {
    SearchGrid grid;
    grid.r_values.resize(T + 1);
    std::iota(grid.r_values.begin(), grid.r_values.end(), 0);
    grid.gate_ratios = {0.0};
    const int scale = space.find_head(HeadKind::DiscreteScalar);
    grid.scale_indices = {scale >= 0 ? space.heads[scale].default_index : 0};
    return grid;
}

SearchResult brute_force(const EditTask& task, const HyperSpace& space,
                         const NoiseSchedule& sched, const SearchGrid& grid,
                         const RewardConfig& reward_cfg) {
    if (grid.size() == 0) throw std::invalid_argument("empty search grid");
    SearchResult result;
    result.evaluations.reserve(grid.size());
    bool first = true;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const GlobalConfig cfg = grid_config(grid, i);
        const double reward = evaluate_config(task, space, sched, cfg, reward_cfg,
                                              result.nfe_count);
        result.evaluations.emplace_back(cfg, reward);
        if (first || reward > result.best_reward) {
            result.best_reward = reward;
            result.best_config = cfg;
            first = false;
        }
    }
    return result;
}

SearchResult random_search(const EditTask& task, const HyperSpace& space,
                           const NoiseSchedule& sched, const SearchGrid& grid,
                           const RewardConfig& reward_cfg, int budget_configs,
                           std::uint64_t seed) {
    if (budget_configs < 1) throw std::invalid_argument("random search needs budget >= 1");
    if (grid.size() == 0) throw std::invalid_argument("empty search grid");

    // shuffle-prefix sampling: nested budgets evaluate nested config sets
    std::vector<std::size_t> order(grid.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(seed, "random-search"));
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        const auto j = static_cast<std::size_t>(
            rng.uniform_int(static_cast<std::int64_t>(i),
                            static_cast<std::int64_t>(order.size()) - 1));
        std::swap(order[i], order[j]);
    }

    const std::size_t n = std::min<std::size_t>(budget_configs, order.size());
    SearchResult result;
    result.evaluations.reserve(n);
    bool first = true;
    for (std::size_t i = 0; i < n; ++i) {
        const GlobalConfig cfg = grid_config(grid, order[i]);
        const double reward = evaluate_config(task, space, sched, cfg, reward_cfg,
                                              result.nfe_count);
        result.evaluations.emplace_back(cfg, reward);
        if (first || reward > result.best_reward) {
            result.best_reward = reward;
            result.best_config = cfg;
            first = false;
        }
    }
    return result;
}

PolicyEvaluation evaluate_policy(const PolicyParams& policy, const EditTask& task,
                                 const HyperSpace& space, const NoiseSchedule& sched,
                                 const RewardConfig& reward_cfg, bool greedy,
                                 std::uint64_t seed) {
    if (policy.cfg.head_sizes.size() != space.heads.size())
        throw DataError("checkpoint action space does not match the hyperparameter space");
    for (std::size_t k = 0; k < space.heads.size(); ++k)
        if (policy.cfg.head_sizes[k] != static_cast<int>(space.heads[k].values.size()))
            throw DataError("checkpoint head cardinality does not match the space");

    Rng rng(derive_seed(seed, "policy-eval"));
    PolicyEvaluation eval;
    eval.trajectory = collect_trajectory(policy, nullptr, nullptr, task, space, sched,
                                         reward_cfg, rng, greedy);
    eval.reward = eval.trajectory.reward;
    eval.nfe_count = eval.trajectory.nfe;
    return eval;
}

CompareTable compare(const PolicyParams& policy, const std::vector<EditTask>& tasks,
                     const HyperSpace& space, const NoiseSchedule& sched,
                     const SearchGrid& grid, const RewardConfig& reward_cfg,
                     const std::vector<int>& trial_counts, std::uint64_t seed) {
    if (tasks.empty()) throw DataError("compare needs at least one task");
    if (trial_counts.empty()) throw std::invalid_argument("compare needs trial counts");

    CompareTable table;
    table.trial_counts = trial_counts;
    const int max_trials = *std::max_element(trial_counts.begin(), trial_counts.end());

    // default column: every head at its declared default, all T steps
    StepAction default_action;
    for (const auto& head : space.heads) default_action.indices.push_back(head.default_index);

    table.aggregate.label = "aggregate";
    table.aggregate.reward_best_of.assign(trial_counts.size(), 0.0);
    table.aggregate.nfe_best_of.assign(trial_counts.size(), 0);

    for (std::size_t i = 0; i < tasks.size(); ++i) {
        const EditTask& task = tasks[i];
        CompareRow row;
        row.label = "task" + std::to_string(i);

        {
            std::vector<StepAction> actions(sched.T, default_action);
            std::int64_t nfe = 0;
            const EpisodeRecord episode =
                rollout(task, space, sched, sequence_provider(actions));
            nfe = episode.nfe_count;
            row.reward_default = compose(episode.final_x0, task, reward_cfg).total;
            row.nfe_default = nfe;
        }

        const SearchResult trials = random_search(task, space, sched, grid, reward_cfg,
                                                  max_trials, derive_seed(seed, "trials", i));
        for (int k : trial_counts) {
            double best = trials.evaluations[0].second;
            for (int j = 1; j < k && j < static_cast<int>(trials.evaluations.size()); ++j)
                best = std::max(best, trials.evaluations[j].second);
            row.reward_best_of.push_back(best);
            row.nfe_best_of.push_back(static_cast<std::int64_t>(k) * sched.T);
        }

        const PolicyEvaluation eval =
            evaluate_policy(policy, task, space, sched, reward_cfg, /*greedy=*/true);
        row.reward_policy = eval.reward.total;
        row.nfe_policy = eval.nfe_count;

        const SearchResult optimum = brute_force(task, space, sched, grid, reward_cfg);
        row.reward_optimal = optimum.best_reward;
        row.nfe_optimal = optimum.nfe_count;
        row.policy_exceeds_grid = row.reward_policy > row.reward_optimal;

        table.aggregate.reward_default += row.reward_default;
        for (std::size_t k = 0; k < trial_counts.size(); ++k) {
            table.aggregate.reward_best_of[k] += row.reward_best_of[k];
            table.aggregate.nfe_best_of[k] += row.nfe_best_of[k];
        }
        table.aggregate.reward_policy += row.reward_policy;
        table.aggregate.reward_optimal += row.reward_optimal;
        table.aggregate.nfe_default += row.nfe_default;
        table.aggregate.nfe_policy += row.nfe_policy;
        table.aggregate.nfe_optimal += row.nfe_optimal;

        table.rows.push_back(std::move(row));
    }

    const double n = static_cast<double>(tasks.size());
    table.aggregate.reward_default /= n;
    for (double& r : table.aggregate.reward_best_of) r /= n;
    table.aggregate.reward_policy /= n;
    table.aggregate.reward_optimal /= n;
    for (const auto& row : table.rows)
        table.aggregate.policy_exceeds_grid |= row.policy_exceeds_grid;
    return table;
}

namespace {

void stream_row(std::ostream& out, const CompareRow& row) {
    out << row.label << '\t' << format_double(row.reward_default);
    for (double r : row.reward_best_of) out << '\t' << format_double(r);
    out << '\t' << format_double(row.reward_policy) << '\t'
        << format_double(row.reward_optimal) << '\t' << row.nfe_default;
    for (auto nfe : row.nfe_best_of) out << '\t' << nfe;
    out << '\t' << row.nfe_policy << '\t' << row.nfe_optimal << '\t'
        << (row.policy_exceeds_grid ? "policy>grid" : "-") << '\n';
}

json row_to_json(const CompareRow& row, const std::vector<int>& trial_counts) {
    json j;
    j["label"] = row.label;
    j["reward_default"] = row.reward_default;
    for (std::size_t k = 0; k < trial_counts.size(); ++k)
        j["reward_best_of_" + std::to_string(trial_counts[k])] = row.reward_best_of[k];
    j["reward_policy"] = row.reward_policy;
    j["reward_optimal"] = row.reward_optimal;
    j["nfe_default"] = row.nfe_default;
    for (std::size_t k = 0; k < trial_counts.size(); ++k)
        j["nfe_best_of_" + std::to_string(trial_counts[k])] = row.nfe_best_of[k];
    j["nfe_policy"] = row.nfe_policy;
    j["nfe_optimal"] = row.nfe_optimal;
    j["policy_exceeds_grid"] = row.policy_exceeds_grid;
    return j;
}

}  // namespace

void write_compare_table(const std::string& path, const CompareTable& table,
                         const std::string& config_hash, std::uint64_t seed) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write comparison table: " + path);
    out << "# config_hash=" << config_hash << " seed=" << seed << "\n";
    out << "task\treward_default";
    for (int k : table.trial_counts) out << "\treward_best_of_" << k;
    out << "\treward_policy\treward_optimal\tnfe_default";
    for (int k : table.trial_counts) out << "\tnfe_best_of_" << k;
    out << "\tnfe_policy\tnfe_optimal\tnote\n";
    for (const auto& row : table.rows) stream_row(out, row);
    stream_row(out, table.aggregate);
    if (!out) throw DataError("write failed: " + path);
}

void write_compare_json(const std::string& path, const CompareTable& table,
                        const std::string& config_hash, std::uint64_t seed) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write comparison json: " + path);
    json doc;
    doc["format"] = "autoedit-compare";
    doc["version"] = 1;
    doc["config_hash"] = config_hash;
    doc["seed"] = seed;
    doc["trial_counts"] = table.trial_counts;
    doc["rows"] = json::array();
    for (const auto& row : table.rows) doc["rows"].push_back(row_to_json(row, table.trial_counts));
    doc["aggregate"] = row_to_json(table.aggregate, table.trial_counts);
    out << doc.dump(2) << "\n";
    if (!out) throw DataError("write failed: " + path);
}

}  // namespace autoedit
