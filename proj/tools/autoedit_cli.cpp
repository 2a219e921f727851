#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "autoedit/checkpoint.hpp"
#include "autoedit/config.hpp"
#include "autoedit/environment.hpp"
#include "autoedit/errors.hpp"
#include "autoedit/search.hpp"
#include "autoedit/serialize.hpp"
#include "autoedit/task.hpp"
#include "autoedit/trainer.hpp"

namespace {

using autoedit::ConfigError;
using autoedit::DataError;
using json = nlohmann::ordered_json;

struct PipelineInputs {
    autoedit::ExperimentConfig config;
    std::uint64_t master_seed = 0;
};

PipelineInputs load_inputs(const std::string& config_path) {
    PipelineInputs inputs;
    inputs.config = autoedit::load_config(config_path);
    inputs.master_seed = autoedit::effective_master_seed(inputs.config);
    return inputs;
}

autoedit::TaskFile load_tasks_checked(const std::string& path,
                                      const autoedit::ExperimentConfig& config) {
    autoedit::TaskFile file = autoedit::read_task_file(path);
    if (file.config_hash != config.config_hash)
        throw ConfigError("task file " + path + " was generated under config hash " +
                          file.config_hash + ", expected " + config.config_hash);
    return file;
}

autoedit::Checkpoint load_checkpoint_checked(const std::string& path,
                                             const autoedit::ExperimentConfig& config) {
    autoedit::Checkpoint ckpt = autoedit::load_checkpoint(path);
    if (ckpt.config_hash != config.config_hash)
        throw ConfigError("checkpoint " + path + " was trained under config hash " +
                          ckpt.config_hash + ", expected " + config.config_hash);
    if (!autoedit::spaces_equal(ckpt.space, config.space))
        throw ConfigError("checkpoint hyperparameter space differs from the config");
    return ckpt;
}

int cmd_gen_tasks(const std::string& config_path, int count, std::int64_t seed_arg,
                  const std::string& out_path) {
    const PipelineInputs inputs = load_inputs(config_path);
    const std::uint64_t seed =
        seed_arg >= 0 ? static_cast<std::uint64_t>(seed_arg) : inputs.master_seed;

    std::vector<autoedit::EditTask> tasks;
    tasks.reserve(count);
    for (int i = 0; i < count; ++i)
        tasks.push_back(
            autoedit::generate_task(inputs.config.gen, autoedit::derive_seed(seed, "task", i)));
    autoedit::write_task_file(out_path, tasks, inputs.config.config_hash, seed);
    std::cout << "wrote " << tasks.size() << " tasks to " << out_path << "\n";
    return 0;
}

int cmd_pretrain(const std::string& config_path, const std::string& tasks_path,
                 const std::string& out_path) {
    const PipelineInputs inputs = load_inputs(config_path);
    const autoedit::ExperimentConfig& cfg = inputs.config;
    const autoedit::TaskFile tasks = load_tasks_checked(tasks_path, cfg);
    if (tasks.tasks.empty()) throw DataError("task file has no tasks: " + tasks_path);

    const autoedit::NoiseSchedule sched = autoedit::make_linear_schedule(cfg.T);
    autoedit::PolicyParams policy = autoedit::init_net(
        autoedit::policy_net_config(cfg.gen.D, cfg.space),
        autoedit::derive_seed(inputs.master_seed, "policy-init"));
    policy = autoedit::pretrain_phase1(std::move(policy), cfg.space, tasks.tasks, sched,
                                       cfg.phase1, inputs.master_seed);

    autoedit::Checkpoint ckpt;
    ckpt.phase = 1;
    ckpt.config_hash = cfg.config_hash;
    ckpt.seed = inputs.master_seed;
    ckpt.space = cfg.space;
    ckpt.policy = std::move(policy);
    autoedit::save_checkpoint(out_path, ckpt);
    std::cout << "wrote phase-1 checkpoint to " << out_path << "\n";
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& tasks_path,
              const std::string& init_path, const std::string& out_path,
              const std::string& metrics_path) {
    const PipelineInputs inputs = load_inputs(config_path);
    const autoedit::ExperimentConfig& cfg = inputs.config;
    const autoedit::TaskFile tasks = load_tasks_checked(tasks_path, cfg);
    if (tasks.tasks.empty()) throw DataError("task file has no tasks: " + tasks_path);
    const autoedit::Checkpoint init = load_checkpoint_checked(init_path, cfg);

    const autoedit::NoiseSchedule sched = autoedit::make_linear_schedule(cfg.T);
    autoedit::ValueParams value = autoedit::init_net(
        autoedit::value_net_config(cfg.gen.D),
        autoedit::derive_seed(inputs.master_seed, "value-init"));

    autoedit::TrainResult result =
        autoedit::train_phase2(init.policy, init.policy, std::move(value), tasks.tasks,
                               cfg.space, sched, cfg.reward, cfg.ppo, inputs.master_seed);

    autoedit::write_metrics(metrics_path, result.metrics, cfg.config_hash,
                            inputs.master_seed);

    autoedit::Checkpoint ckpt;
    ckpt.phase = 2;
    ckpt.config_hash = cfg.config_hash;
    ckpt.seed = inputs.master_seed;
    ckpt.space = cfg.space;
    ckpt.policy = std::move(result.policy);
    ckpt.value = std::move(result.value);
    autoedit::save_checkpoint(out_path, ckpt);
    std::cout << "wrote phase-2 checkpoint to " << out_path << " and metrics to "
              << metrics_path << "\n";
    return 0;
}

int cmd_edit(const std::string& config_path, const std::string& ckpt_path,
             const std::string& tasks_path, int index, const std::string& out_path) {
    const PipelineInputs inputs = load_inputs(config_path);
    const autoedit::ExperimentConfig& cfg = inputs.config;
    const autoedit::TaskFile tasks = load_tasks_checked(tasks_path, cfg);
    if (index < 0 || index >= static_cast<int>(tasks.tasks.size()))
        throw DataError("task index out of range");
    const autoedit::Checkpoint ckpt = load_checkpoint_checked(ckpt_path, cfg);

    const autoedit::NoiseSchedule sched = autoedit::make_linear_schedule(cfg.T);
    const autoedit::PolicyEvaluation eval = autoedit::evaluate_policy(
        ckpt.policy, tasks.tasks[index], cfg.space, sched, cfg.reward);

    json report;
    report["format"] = "autoedit-edit";
    report["config_hash"] = cfg.config_hash;
    report["seed"] = inputs.master_seed;
    report["task_index"] = index;
    report["inversion_step"] = eval.trajectory.inversion_step;
    report["nfe_count"] = eval.nfe_count;
    report["reward"] = {{"r_edit", eval.reward.r_edit},
                        {"r_noedit", eval.reward.r_noedit},
                        {"total", eval.reward.total}};
    json steps = json::array();
    for (const auto& step : eval.trajectory.steps)
        steps.push_back({{"t", step.state.t}, {"action", step.action.indices}});
    report["steps"] = steps;
    report["final_x0"] = eval.trajectory.final_x0;

    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw DataError("cannot write edit report: " + out_path);
    out << report.dump(2) << "\n";
    std::cout << "edit reward " << autoedit::format_double(eval.reward.total)
              << ", inversion step " << eval.trajectory.inversion_step << ", report in "
              << out_path << "\n";
    return 0;
}

int cmd_search(const std::string& config_path, const std::string& tasks_path,
               const std::string& out_path) {
    const PipelineInputs inputs = load_inputs(config_path);
    const autoedit::ExperimentConfig& cfg = inputs.config;
    const autoedit::TaskFile tasks = load_tasks_checked(tasks_path, cfg);
    if (tasks.tasks.empty()) throw DataError("task file has no tasks: " + tasks_path);

    const autoedit::NoiseSchedule sched = autoedit::make_linear_schedule(cfg.T);
    const autoedit::SearchGrid grid = autoedit::default_grid(cfg.T, cfg.space);
    const std::uint64_t seed = autoedit::derive_seed(inputs.master_seed, "search");

    json doc;
    doc["format"] = "autoedit-search";
    doc["config_hash"] = cfg.config_hash;
    doc["seed"] = inputs.master_seed;
    doc["grid_size"] = grid.size();
    doc["tasks"] = json::array();

    for (std::size_t i = 0; i < tasks.tasks.size(); ++i) {
        const auto& task = tasks.tasks[i];
        const autoedit::SearchResult brute =
            autoedit::brute_force(task, cfg.space, sched, grid, cfg.reward);

        json entry;
        entry["task"] = i;
        entry["brute_force"] = {{"r", brute.best_config.r},
                                {"gate_ratio", brute.best_config.gate_ratio},
                                {"scale_index", brute.best_config.scale_index},
                                {"reward", brute.best_reward},
                                {"nfe", brute.nfe_count}};
        entry["random"] = json::array();
        for (int budget : cfg.trial_counts) {
            const autoedit::SearchResult rnd =
                autoedit::random_search(task, cfg.space, sched, grid, cfg.reward, budget,
                                        autoedit::derive_seed(seed, "budget", i));
            entry["random"].push_back(
                {{"budget", budget}, {"reward", rnd.best_reward}, {"nfe", rnd.nfe_count}});
        }
        doc["tasks"].push_back(std::move(entry));
    }

    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw DataError("cannot write search results: " + out_path);
    out << doc.dump(2) << "\n";
    std::cout << "wrote search results for " << tasks.tasks.size() << " tasks to "
              << out_path << "\n";
    return 0;
}

int cmd_compare(const std::string& config_path, const std::string& ckpt_path,
                const std::string& tasks_path, const std::string& out_path,
                std::string json_path) {
    const PipelineInputs inputs = load_inputs(config_path);
    const autoedit::ExperimentConfig& cfg = inputs.config;
    const autoedit::TaskFile tasks = load_tasks_checked(tasks_path, cfg);
    if (tasks.tasks.empty()) throw DataError("task file has no tasks: " + tasks_path);
    const autoedit::Checkpoint ckpt = load_checkpoint_checked(ckpt_path, cfg);

    const autoedit::NoiseSchedule sched = autoedit::make_linear_schedule(cfg.T);
    const autoedit::SearchGrid grid = autoedit::default_grid(cfg.T, cfg.space);
    const autoedit::CompareTable table =
        autoedit::compare(ckpt.policy, tasks.tasks, cfg.space, sched, grid, cfg.reward,
                          cfg.trial_counts, autoedit::derive_seed(inputs.master_seed, "compare"));

    autoedit::write_compare_table(out_path, table, cfg.config_hash, inputs.master_seed);
    if (json_path.empty()) json_path = out_path + ".json";
    autoedit::write_compare_json(json_path, table, cfg.config_hash, inputs.master_seed);
    std::cout << "wrote comparison for " << tasks.tasks.size() << " tasks to " << out_path
              << " and " << json_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"RL-driven per-step hyperparameter identification for a synthetic "
                 "diffusion-editing environment"};
    app.require_subcommand(1);

    std::string config_path, tasks_path, out_path, ckpt_path, init_path, metrics_path,
        json_path;
    int count = 0, index = 0;
    std::int64_t seed_arg = -1;

    auto* gen = app.add_subcommand("gen-tasks", "generate a task file");
    gen->add_option("--config", config_path, "experiment config")->required();
    gen->add_option("--count", count, "number of tasks")->required();
    gen->add_option("--seed", seed_arg, "task seed (defaults to the master seed)");
    gen->add_option("--out", out_path, "output task file")->required();

    auto* pre = app.add_subcommand("pretrain", "phase-1 prior pretraining");
    pre->add_option("--config", config_path, "experiment config")->required();
    pre->add_option("--tasks", tasks_path, "training task file")->required();
    pre->add_option("--out", out_path, "output checkpoint")->required();

    auto* train = app.add_subcommand("train", "phase-2 PPO training");
    train->add_option("--config", config_path, "experiment config")->required();
    train->add_option("--tasks", tasks_path, "training task file")->required();
    train->add_option("--init", init_path, "phase-1 checkpoint")->required();
    train->add_option("--out", out_path, "output checkpoint")->required();
    train->add_option("--metrics", metrics_path, "metrics csv path")->required();

    auto* edit = app.add_subcommand("edit", "greedy policy rollout on one task");
    edit->add_option("--config", config_path, "experiment config")->required();
    edit->add_option("--ckpt", ckpt_path, "policy checkpoint")->required();
    edit->add_option("--tasks", tasks_path, "task file")->required();
    edit->add_option("--index", index, "task index (default 0)");
    edit->add_option("--out", out_path, "edit report path")->required();

    auto* search = app.add_subcommand("search", "brute-force and random baselines");
    search->add_option("--config", config_path, "experiment config")->required();
    search->add_option("--tasks", tasks_path, "task file")->required();
    search->add_option("--out", out_path, "results path")->required();

    auto* cmp = app.add_subcommand("compare", "policy vs baselines table");
    cmp->add_option("--config", config_path, "experiment config")->required();
    cmp->add_option("--ckpt", ckpt_path, "policy checkpoint")->required();
    cmp->add_option("--tasks", tasks_path, "held-out task file")->required();
    cmp->add_option("--out", out_path, "table path")->required();
    cmp->add_option("--json", json_path, "machine-readable path (default <out>.json)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen_tasks(config_path, count, seed_arg, out_path);
        if (pre->parsed()) return cmd_pretrain(config_path, tasks_path, out_path);
        if (train->parsed())
            return cmd_train(config_path, tasks_path, init_path, out_path, metrics_path);
        if (edit->parsed())
            return cmd_edit(config_path, ckpt_path, tasks_path, index, out_path);
        if (search->parsed()) return cmd_search(config_path, tasks_path, out_path);
        if (cmp->parsed())
            return cmd_compare(config_path, ckpt_path, tasks_path, out_path, json_path);
    } catch (const autoedit::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const autoedit::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const autoedit::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
