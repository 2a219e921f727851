#include "autoedit/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "autoedit/errors.hpp"
#include "autoedit/serialize.hpp"

namespace autoedit {

void validate_ppo_config(const PpoConfig& cfg) {
    if (cfg.gamma <= 0.0 || cfg.gamma > 1.0) throw ConfigError("gamma outside (0,1]");
    if (cfg.lam <= 0.0 || cfg.lam > 1.0) throw ConfigError("lambda outside (0,1]");
    if (cfg.clip_eps <= 0.0 || cfg.clip_eps >= 1.0) throw ConfigError("clip_eps outside (0,1)");
    if (cfg.kl_coeff < 0.0) throw ConfigError("kl_coeff must be nonnegative");
    if (cfg.lr <= 0.0) throw ConfigError("learning rate must be positive");
    if (cfg.episodes < 1 || cfg.batch_episodes < 1 || cfg.epochs_per_batch < 1)
        throw ConfigError("episode counts must be positive");
}

GaeResult compute_gae(const Vec& values, double reward, const PpoConfig& cfg) {
    const int T = static_cast<int>(values.size());
    if (T < 1) throw std::invalid_argument("compute_gae needs at least one value");

    GaeResult out;
    out.advantages.assign(T, 0.0);
    out.returns.assign(T, 0.0);

    if (!cfg.alg2_literal) {
        // reward lands on the final denoising step only; terminal bootstrap 0
        double next_adv = 0.0;
        for (int k = T - 1; k >= 0; --k) {
            const double r_k = k == T - 1 ? reward : 0.0;
            const double v_next = k == T - 1 ? 0.0 : values[k + 1];
            const double delta = r_k + cfg.gamma * v_next - values[k];
            next_adv = delta + cfg.gamma * cfg.lam * next_adv;
            out.advantages[k] = next_adv;
            out.returns[k] = next_adv + values[k];
        }
        return out;
    }

    // published recursion: reward added in every delta; v_0 (the value at the
    // terminal state, which is never evaluated) taken as 0
    double prev_adv = 0.0;
    for (int t = 1; t <= T; ++t) {
        const int k = T - t;  // rollout index of timestep t
        const double v_t = values[k];
        const double v_prev = t == 1 ? 0.0 : values[k + 1];
        const double delta = reward + cfg.gamma * v_prev - v_t;
        prev_adv = delta + cfg.gamma * cfg.lam * prev_adv;
        out.advantages[k] = prev_adv;
        out.returns[k] = prev_adv + v_t;
    }
    return out;
}

double clipped_surrogate(double new_logp, double old_logp, double advantage,
                         double clip_eps) {
    const double u = std::exp(new_logp - old_logp);
    const double clipped = std::clamp(u, 1.0 - clip_eps, 1.0 + clip_eps);
    return std::min(u * advantage, clipped * advantage);
}

double categorical_kl(const Vec& new_probs, const Vec& ref_probs) {
    if (new_probs.size() != ref_probs.size())
        throw std::invalid_argument("categorical_kl: size mismatch");
    double kl = 0.0;
    for (std::size_t i = 0; i < new_probs.size(); ++i) {
        const double p = new_probs[i];
        if (p <= 0.0) continue;
        if (ref_probs[i] <= 0.0)
            throw NumericError("infinite KL: reference has zero mass where policy does not");
        kl += p * (std::log(p) - std::log(ref_probs[i]));
    }
    return kl;
}

double kl_to_reference(const std::vector<std::vector<Vec>>& new_dists,
                       const std::vector<std::vector<Vec>>& ref_dists) {
    if (new_dists.size() != ref_dists.size() || new_dists.empty())
        throw std::invalid_argument("kl_to_reference: step count mismatch");
    double total = 0.0;
    for (std::size_t s = 0; s < new_dists.size(); ++s) {
        if (new_dists[s].size() != ref_dists[s].size())
            throw std::invalid_argument("kl_to_reference: head count mismatch");
        for (std::size_t h = 0; h < new_dists[s].size(); ++h)
            total += categorical_kl(new_dists[s][h], ref_dists[s][h]);
    }
    return total / static_cast<double>(new_dists.size());
}

double cross_entropy(const Vec& log_probs, int label) {
    if (label < 0 || label >= static_cast<int>(log_probs.size()))
        throw std::invalid_argument("cross_entropy: label out of range");
    return -log_probs[label];
}

int sample_categorical(const Vec& probs, Rng& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
}

PolicyParams pretrain_phase1(PolicyParams policy, const HyperSpace& space,
                             const std::vector<EditTask>& tasks,
                             const NoiseSchedule& sched, const Phase1Config& cfg,
                             std::uint64_t seed) {
    if (tasks.empty()) throw DataError("phase-1 pretraining needs tasks");
    if (cfg.steps < 1 || cfg.batch_episodes < 1)
        throw ConfigError("phase-1 needs positive step and batch counts");
    validate_space(space);

    Rng rng(derive_seed(seed, "phase1"));
    NetParams grads = zero_net(policy.cfg);
    AdamState adam;
    ForwardCache cache;
    const int T = sched.T;
    const int K = space.num_heads();
    const double scale = 1.0 / (T * cfg.batch_episodes);

    for (int step = 0; step < cfg.steps; ++step) {
        zero_grads(grads);
        for (int b = 0; b < cfg.batch_episodes; ++b) {
            const auto& task =
                tasks[rng.uniform_int(0, static_cast<std::int64_t>(tasks.size()) - 1)];
            const GlobalConfig sample = sample_prior(space, T, cfg.prior, rng);
            const auto labels = global_to_perstep(sample, T, space);
            const EpisodeRecord episode =
                rollout(task, space, sched, sequence_provider(labels));

            std::vector<Vec> dlogits(K);
            for (int k = 0; k < T; ++k) {
                const LatentState& state = episode.states[k];
                const PolicyOutput out =
                    policy_forward(policy, state.x, state.t, task, &cache);
                for (int h = 0; h < K; ++h) {
                    dlogits[h] = out.probs[h];
                    dlogits[h][labels[k].indices[h]] -= 1.0;
                    for (double& g : dlogits[h]) g *= scale;
                }
                net_backward(policy, cache, dlogits, grads);
            }
        }
        adam_step(policy, grads, adam, cfg.lr);
    }
    return policy;
}

Trajectory collect_trajectory(const PolicyParams& policy, const PolicyParams* theta1,
                              const ValueParams* value, const EditTask& task,
                              const HyperSpace& space, const NoiseSchedule& sched,
                              const RewardConfig& reward_cfg, Rng& rng, bool greedy) {
    Trajectory traj;
    traj.steps.reserve(sched.T);
    const int K = space.num_heads();

    auto provider = [&](const LatentState& state, int) {
        TrajectoryStep step;
        step.state = state;
        const PolicyOutput out = policy_forward(policy, state.x, state.t, task);
        step.behavior_dists = out.probs;
        if (theta1) {
            const PolicyOutput ref = policy_forward(*theta1, state.x, state.t, task);
            step.ref_dists = ref.probs;
        }
        step.action.indices.resize(K);
        for (int h = 0; h < K; ++h) {
            int idx;
            if (greedy) {
                idx = static_cast<int>(std::max_element(out.probs[h].begin(),
                                                        out.probs[h].end()) -
                                       out.probs[h].begin());
            } else {
                idx = sample_categorical(out.probs[h], rng);
            }
            step.action.indices[h] = idx;
            step.behavior_logp += out.log_probs[h][idx];
        }
        if (value) step.value = value_forward(*value, state.x, state.t, task);
        traj.steps.push_back(step);
        return step.action;
    };

    EpisodeRecord episode = rollout(task, space, sched, provider);
    traj.final_x0 = std::move(episode.final_x0);
    traj.nfe = episode.nfe_count;
    traj.reward = compose(traj.final_x0, task, reward_cfg);

    std::vector<StepAction> actions;
    actions.reserve(traj.steps.size());
    for (const auto& s : traj.steps) actions.push_back(s.action);
    traj.inversion_step = perstep_to_inversion_step(space, actions);
    return traj;
}

namespace {

struct BatchStats {
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double kl = 0.0;
};

// One optimization pass over a collected batch; returns per-step means.
BatchStats ppo_update(PolicyParams& policy, ValueParams& value,
                      const std::vector<Trajectory>& batch,
                      const std::vector<Vec>& advantages,
                      const std::vector<Vec>& returns, const PpoConfig& cfg,
                      const std::vector<EditTask>& batch_tasks, NetParams& pol_grads,
                      NetParams& val_grads, AdamState& pol_adam, AdamState& val_adam) {
    zero_grads(pol_grads);
    zero_grads(val_grads);

    std::size_t total_steps = 0;
    for (const auto& traj : batch) total_steps += traj.steps.size();
    const double inv_n = 1.0 / static_cast<double>(total_steps);

    BatchStats stats;
    ForwardCache cache, vcache;
    const int K = static_cast<int>(policy.cfg.head_sizes.size());
    std::vector<Vec> dlogits(K);
    std::vector<Vec> dv(1);

    for (std::size_t b = 0; b < batch.size(); ++b) {
        const Trajectory& traj = batch[b];
        const EditTask& task = batch_tasks[b];
        for (std::size_t k = 0; k < traj.steps.size(); ++k) {
            const TrajectoryStep& step = traj.steps[k];
            const double adv = advantages[b][k];

            const PolicyOutput out =
                policy_forward(policy, step.state.x, step.state.t, task, &cache);

            double new_logp = 0.0;
            for (int h = 0; h < K; ++h) new_logp += out.log_probs[h][step.action.indices[h]];
            const double u = std::exp(new_logp - step.behavior_logp);
            const double clipped = std::clamp(u, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps);
            const double surrogate = std::min(u * adv, clipped * adv);
            const bool pass_through = u * adv <= clipped * adv;

            double kl_step = 0.0;
            for (int h = 0; h < K; ++h) {
                const Vec& p = out.probs[h];
                const Vec& q = step.ref_dists[h];
                const double kl_head = categorical_kl(p, q);
                kl_step += kl_head;

                Vec& dl = dlogits[h];
                dl.assign(p.size(), 0.0);
                if (pass_through) {
                    const double g = adv * u;
                    for (std::size_t j = 0; j < p.size(); ++j) dl[j] = g * p[j];
                    dl[step.action.indices[h]] -= g;
                }
                if (cfg.kl_coeff > 0.0) {
                    for (std::size_t j = 0; j < p.size(); ++j) {
                        if (p[j] <= 0.0) continue;
                        dl[j] += cfg.kl_coeff * p[j] *
                                 (std::log(p[j]) - std::log(q[j]) - kl_head);
                    }
                }
                for (double& g : dl) g *= inv_n;
            }
            net_backward(policy, cache, dlogits, pol_grads);

            const double v = value_forward(value, step.state.x, step.state.t, task, &vcache);
            const double verr = v - returns[b][k];
            dv[0] = {2.0 * verr * inv_n};
            net_backward(value, vcache, dv, val_grads);

            stats.policy_loss += -(surrogate - cfg.kl_coeff * kl_step);
            stats.value_loss += verr * verr;
            stats.kl += kl_step;
        }
    }

    stats.policy_loss *= inv_n;
    stats.value_loss *= inv_n;
    stats.kl *= inv_n;

    if (!std::isfinite(stats.policy_loss) || !std::isfinite(stats.value_loss))
        throw NumericError("non-finite loss in PPO update (policy_loss=" +
                           std::to_string(stats.policy_loss) +
                           ", value_loss=" + std::to_string(stats.value_loss) + ")");

    adam_step(policy, pol_grads, pol_adam, cfg.lr);
    adam_step(value, val_grads, val_adam, cfg.lr);
    return stats;
}

}  // namespace

TrainResult train_phase2(PolicyParams theta2, const PolicyParams& theta1,
                         ValueParams value, const std::vector<EditTask>& tasks,
                         const HyperSpace& space, const NoiseSchedule& sched,
                         const RewardConfig& reward_cfg, const PpoConfig& cfg,
                         std::uint64_t seed) {
    validate_ppo_config(cfg);
    if (tasks.empty()) throw DataError("phase-2 training needs tasks");

    TrainResult result;
    result.policy = std::move(theta2);
    result.value = std::move(value);
    result.metrics.reserve(cfg.episodes);

    NetParams pol_grads = zero_net(result.policy.cfg);
    NetParams val_grads = zero_net(result.value.cfg);
    AdamState pol_adam, val_adam;

    Rng task_rng(derive_seed(seed, "phase2-tasks"));

    int episode = 0;
    while (episode < cfg.episodes) {
        const int batch_n = std::min(cfg.batch_episodes, cfg.episodes - episode);

        std::vector<Trajectory> batch;
        std::vector<EditTask> batch_tasks;
        batch.reserve(batch_n);
        for (int b = 0; b < batch_n; ++b) {
            const auto& task =
                tasks[task_rng.uniform_int(0, static_cast<std::int64_t>(tasks.size()) - 1)];
            Rng episode_rng(derive_seed(seed, "phase2-episode", episode + b));
            batch.push_back(collect_trajectory(result.policy, &theta1, &result.value, task,
                                               space, sched, reward_cfg, episode_rng,
                                               /*greedy=*/false));
            batch_tasks.push_back(task);
        }

        std::vector<Vec> advantages(batch_n), returns(batch_n);
        for (int b = 0; b < batch_n; ++b) {
            Vec values;
            values.reserve(batch[b].steps.size());
            for (const auto& s : batch[b].steps) values.push_back(s.value);
            GaeResult gae = compute_gae(values, batch[b].reward.total, cfg);
            advantages[b] = std::move(gae.advantages);
            returns[b] = std::move(gae.returns);
        }

        if (cfg.normalize_advantages) {
            double mean = 0.0;
            std::size_t n = 0;
            for (const auto& a : advantages)
                for (double x : a) {
                    mean += x;
                    ++n;
                }
            mean /= static_cast<double>(n);
            double var = 0.0;
            for (const auto& a : advantages)
                for (double x : a) var += (x - mean) * (x - mean);
            const double std_dev = std::sqrt(var / static_cast<double>(n));
            for (auto& a : advantages)
                for (double& x : a) x = (x - mean) / (std_dev + 1e-8);
        }

        BatchStats stats;
        for (int epoch = 0; epoch < cfg.epochs_per_batch; ++epoch)
            stats = ppo_update(result.policy, result.value, batch, advantages, returns, cfg,
                               batch_tasks, pol_grads, val_grads, pol_adam, val_adam);

        double mean_inv = 0.0;
        for (const auto& traj : batch) mean_inv += traj.inversion_step;
        mean_inv /= batch_n;

        for (int b = 0; b < batch_n; ++b) {
            MetricsRow row;
            row.episode = episode + b;
            row.reward_total = batch[b].reward.total;
            row.r_edit = batch[b].reward.r_edit;
            row.r_noedit = batch[b].reward.r_noedit;
            row.kl = stats.kl;
            row.policy_loss = stats.policy_loss;
            row.value_loss = stats.value_loss;
            row.mean_inversion_step = mean_inv;
            result.metrics.push_back(row);
        }
        episode += batch_n;
    }
    return result;
}

void write_metrics(const std::string& path, const std::vector<MetricsRow>& rows,
                   const std::string& config_hash, std::uint64_t seed) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write metrics file: " + path);
    out << "# config_hash=" << config_hash << " seed=" << seed << "\n";
    out << "episode,reward_total,r_edit,r_noedit,kl,policy_loss,value_loss,"
           "mean_inversion_step\n";
    for (const auto& r : rows) {
        out << r.episode << ',' << format_double(r.reward_total) << ','
            << format_double(r.r_edit) << ',' << format_double(r.r_noedit) << ','
            << format_double(r.kl) << ',' << format_double(r.policy_loss) << ','
            << format_double(r.value_loss) << ',' << format_double(r.mean_inversion_step)
            << "\n";
    }
    if (!out) throw DataError("write failed: " + path);
}

}  // namespace autoedit
