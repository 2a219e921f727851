#include <doctest.h>

#include <cmath>
#include <limits>

#include "autoedit/errors.hpp"
#include "autoedit/search.hpp"
#include "autoedit/trainer.hpp"

using namespace autoedit;

namespace {

// independent oracle: A_k = sum_{j>=k} (gamma*lam)^{j-k} delta_j with the
// terminal-only reward convention
Vec gae_double_sum(const Vec& values, double reward, double gamma, double lam) {
    const int T = static_cast<int>(values.size());
    Vec deltas(T);
    for (int k = 0; k < T; ++k) {
        const double r_k = k == T - 1 ? reward : 0.0;
        const double v_next = k == T - 1 ? 0.0 : values[k + 1];
        deltas[k] = r_k + gamma * v_next - values[k];
    }
    Vec adv(T, 0.0);
    for (int k = 0; k < T; ++k) {
        double w = 1.0;
        for (int j = k; j < T; ++j) {
            adv[k] += w * deltas[j];
            w *= gamma * lam;
        }
    }
    return adv;
}

GenConfig degenerate_gen() {
    GenConfig cfg;
    cfg.leak_lo = cfg.leak_hi = 0.0;  // edits cost nothing outside the mask
    return cfg;
}

}  // namespace

TEST_CASE("compute_gae on pinned cases") {
    PpoConfig cfg;

    SUBCASE("single step") {
        const GaeResult out = compute_gae(Vec{0.3}, 2.0, cfg);
        CHECK(out.advantages[0] == doctest::Approx(2.0 - 0.3).epsilon(1e-12));
        CHECK(out.returns[0] == doctest::Approx(2.0).epsilon(1e-12));
    }
    SUBCASE("lambda = 0 collapses to one-step TD errors") {
        PpoConfig td = cfg;
        td.lam = 1e-12;  // lam must stay in (0,1]; effectively zero
        const Vec values{0.2, 0.4, 0.6};
        const GaeResult out = compute_gae(values, 1.0, td);
        CHECK(out.advantages[2] == doctest::Approx(1.0 - 0.6).epsilon(1e-9));
        CHECK(out.advantages[1] == doctest::Approx(td.gamma * 0.6 - 0.4).epsilon(1e-9));
        CHECK(out.advantages[0] == doctest::Approx(td.gamma * 0.4 - 0.2).epsilon(1e-9));
    }
    SUBCASE("T=3 worked example") {
        const GaeResult out = compute_gae(Vec{0.2, 0.4, 0.6}, 1.0, cfg);
        CHECK(out.advantages[0] == doctest::Approx(0.7491).epsilon(5e-5));
        CHECK(out.advantages[1] == doctest::Approx(0.5790).epsilon(5e-5));
        CHECK(out.advantages[2] == doctest::Approx(0.4000).epsilon(5e-5));
        for (int k = 0; k < 3; ++k)
            CHECK(out.returns[k] ==
                  doctest::Approx(out.advantages[k] + Vec{0.2, 0.4, 0.6}[k]).epsilon(1e-12));
    }
    SUBCASE("empty values rejected") {
        CHECK_THROWS_AS(compute_gae(Vec{}, 1.0, cfg), std::invalid_argument);
    }
}

TEST_CASE("compute_gae equals the double-sum oracle") {
    PpoConfig cfg;
    Rng rng(17);
    for (int instance = 0; instance < 300; ++instance) {
        const int T = static_cast<int>(rng.uniform_int(1, 16));
        Vec values(T);
        for (double& v : values) v = rng.uniform(-2.0, 2.0);
        const double reward = rng.uniform(-5.0, 5.0);

        const GaeResult fast = compute_gae(values, reward, cfg);
        const Vec oracle = gae_double_sum(values, reward, cfg.gamma, cfg.lam);
        for (int k = 0; k < T; ++k) {
            CHECK(std::abs(fast.advantages[k] - oracle[k]) <= 1e-12);
            CHECK(std::abs(fast.returns[k] - (oracle[k] + values[k])) <= 1e-12);
        }
    }
}

TEST_CASE("alg2_literal adds the reward in every delta") {
    PpoConfig cfg;
    cfg.alg2_literal = true;
    const double R = 1.5;
    const Vec values{0.7, 0.2};  // rollout order: v at t=2, then t=1

    const GaeResult out = compute_gae(values, R, cfg);
    // t=1 (k=1): delta = R + gamma*v_0 - v_1, v_0 = 0
    const double a1 = R - 0.2;
    // t=2 (k=0): delta = R + gamma*v_1 - v_2
    const double a2 = (R + cfg.gamma * 0.2 - 0.7) + cfg.gamma * cfg.lam * a1;
    CHECK(out.advantages[1] == doctest::Approx(a1).epsilon(1e-12));
    CHECK(out.advantages[0] == doctest::Approx(a2).epsilon(1e-12));
    CHECK(out.returns[0] == doctest::Approx(a2 + 0.7).epsilon(1e-12));
}

TEST_CASE("clipped surrogate") {
    CHECK(clipped_surrogate(std::log(1.0), 0.0, 0.37, 0.2) ==
          doctest::Approx(0.37).epsilon(1e-12));
    CHECK(clipped_surrogate(std::log(2.0), 0.0, 1.0, 0.2) ==
          doctest::Approx(1.2).epsilon(1e-12));
    CHECK(clipped_surrogate(std::log(0.5), 0.0, -1.0, 0.2) ==
          doctest::Approx(-0.8).epsilon(1e-12));
}

TEST_CASE("categorical KL") {
    SUBCASE("identical distributions give zero") {
        CHECK(categorical_kl(Vec{0.3, 0.7}, Vec{0.3, 0.7}) == doctest::Approx(0.0));
    }
    SUBCASE("worked example") {
        CHECK(categorical_kl(Vec{0.75, 0.25}, Vec{0.5, 0.5}) ==
              doctest::Approx(0.1308).epsilon(5e-4));
        // direct formula evaluation as the oracle
        const double direct = 0.75 * std::log(1.5) + 0.25 * std::log(0.5);
        CHECK(categorical_kl(Vec{0.75, 0.25}, Vec{0.5, 0.5}) ==
              doctest::Approx(direct).epsilon(1e-12));
    }
    SUBCASE("nonnegative on random pairs") {
        Rng rng(23);
        for (int i = 0; i < 200; ++i) {
            Vec p(4), q(4);
            double ps = 0, qs = 0;
            for (int j = 0; j < 4; ++j) {
                p[j] = rng.uniform(0.01, 1.0);
                q[j] = rng.uniform(0.01, 1.0);
                ps += p[j];
                qs += q[j];
            }
            for (int j = 0; j < 4; ++j) {
                p[j] /= ps;
                q[j] /= qs;
            }
            CHECK(categorical_kl(p, q) >= -1e-15);
        }
    }
    SUBCASE("zero reference mass is an error") {
        CHECK_THROWS_AS(categorical_kl(Vec{0.5, 0.5}, Vec{1.0, 0.0}), NumericError);
    }
    SUBCASE("step-averaged structure") {
        std::vector<std::vector<Vec>> a{{Vec{0.75, 0.25}}, {Vec{0.75, 0.25}}};
        std::vector<std::vector<Vec>> b{{Vec{0.5, 0.5}}, {Vec{0.5, 0.5}}};
        CHECK(kl_to_reference(a, b) ==
              doctest::Approx(categorical_kl(Vec{0.75, 0.25}, Vec{0.5, 0.5})).epsilon(1e-12));
    }
}

TEST_CASE("cross entropy basics") {
    const Vec uniform_lp{std::log(0.5), std::log(0.5)};
    CHECK(cross_entropy(uniform_lp, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    const Vec onehot_lp{0.0, -40.0};
    CHECK(cross_entropy(onehot_lp, 0) == 0.0);
    CHECK_THROWS_AS(cross_entropy(uniform_lp, 2), std::invalid_argument);
}

TEST_CASE("ratio is exactly one right after a policy snapshot") {
    const NoiseSchedule sched = make_linear_schedule(6);
    const HyperSpace space = default_space();
    const EditTask task = generate_task(GenConfig{}, 5);

    PolicyParams policy = init_net(policy_net_config(task.dim(), space), 99);
    Rng rng(31);
    randomize_net(policy, rng, 0.4);

    RewardConfig reward_cfg;
    Rng episode_rng(7);
    const Trajectory traj = collect_trajectory(policy, nullptr, nullptr, task, space, sched,
                                               reward_cfg, episode_rng, false);
    for (const auto& step : traj.steps) {
        const PolicyOutput out = policy_forward(policy, step.state.x, step.state.t, task);
        double new_logp = 0.0;
        for (std::size_t h = 0; h < out.log_probs.size(); ++h)
            new_logp += out.log_probs[h][step.action.indices[h]];
        const double u = std::exp(new_logp - step.behavior_logp);
        CHECK(u == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(clipped_surrogate(new_logp, step.behavior_logp, 0.42, 0.2) ==
              doctest::Approx(0.42).epsilon(1e-12));
    }
}

TEST_CASE("phase-1 pretraining pulls action marginals toward the prior") {
    const NoiseSchedule sched = make_linear_schedule(6);
    const HyperSpace space = default_space();
    std::vector<EditTask> tasks;
    for (int seed = 0; seed < 8; ++seed) tasks.push_back(generate_task(GenConfig{}, seed));

    Phase1Config cfg;
    cfg.steps = 400;
    cfg.lr = 2e-3;

    PolicyParams policy = init_net(policy_net_config(tasks[0].dim(), space), 7);
    const PolicyParams before = policy;
    policy = pretrain_phase1(std::move(policy), space, tasks, sched, cfg, 11);

    // the prior never emits the non-default scale values, so the trained
    // policy should put most scale mass on the default index
    const int scale_head = space.find_head(HeadKind::DiscreteScalar);
    const int default_idx = space.heads[scale_head].default_index;
    Rng rng(3);
    double mass_after = 0.0, mass_before = 0.0;
    int n = 0;
    for (const auto& task : tasks) {
        LatentState state = invert(task, sched);
        const PolicyOutput out = policy_forward(policy, state.x, state.t, task);
        const PolicyOutput init_out = policy_forward(before, state.x, state.t, task);
        mass_after += out.probs[scale_head][default_idx];
        mass_before += init_out.probs[scale_head][default_idx];
        ++n;
    }
    CHECK(mass_after / n > 0.8);
    CHECK(mass_before / n == doctest::Approx(1.0 / 6).epsilon(1e-9));
    (void)rng;
}

TEST_CASE("metrics writing and training determinism") {
    const NoiseSchedule sched = make_linear_schedule(5);
    const HyperSpace space = default_space();
    std::vector<EditTask> tasks;
    for (int seed = 0; seed < 4; ++seed) tasks.push_back(generate_task(GenConfig{}, seed));

    PolicyParams theta1 = init_net(policy_net_config(tasks[0].dim(), space), 42);
    ValueParams value = init_net(value_net_config(tasks[0].dim()), 43);

    PpoConfig cfg;
    cfg.episodes = 24;
    cfg.batch_episodes = 8;

    RewardConfig reward_cfg;
    const TrainResult a =
        train_phase2(theta1, theta1, value, tasks, space, sched, reward_cfg, cfg, 1234);
    const TrainResult b =
        train_phase2(theta1, theta1, value, tasks, space, sched, reward_cfg, cfg, 1234);

    REQUIRE(a.metrics.size() == 24);
    REQUIRE(b.metrics.size() == 24);
    for (std::size_t i = 0; i < a.metrics.size(); ++i) {
        CHECK(a.metrics[i].reward_total == b.metrics[i].reward_total);
        CHECK(a.metrics[i].kl == b.metrics[i].kl);
        CHECK(a.metrics[i].policy_loss == b.metrics[i].policy_loss);
        CHECK(a.metrics[i].value_loss == b.metrics[i].value_loss);
    }
}

TEST_CASE("a dominant KL coefficient keeps the policy near the reference") {
    const NoiseSchedule sched = make_linear_schedule(5);
    const HyperSpace space = default_space();
    std::vector<EditTask> tasks;
    for (int seed = 0; seed < 4; ++seed) tasks.push_back(generate_task(GenConfig{}, seed));

    const PolicyParams theta1 = init_net(policy_net_config(tasks[0].dim(), space), 50);
    PolicyParams theta2 = theta1;
    Rng rng(51);
    randomize_net(theta2, rng, 0.15);  // start away from the reference
    ValueParams value = init_net(value_net_config(tasks[0].dim()), 52);

    PpoConfig cfg;
    cfg.kl_coeff = 10.0;
    cfg.lr = 1e-3;
    cfg.episodes = 50;
    cfg.batch_episodes = 1;

    RewardConfig reward_cfg;
    const TrainResult result =
        train_phase2(theta2, theta1, value, tasks, space, sched, reward_cfg, cfg, 7);

    const double first = result.metrics.front().kl;
    const double last = result.metrics.back().kl;
    CHECK(last < first);
    // smoothed trend: every 10-update window no higher than the previous one
    for (int w = 1; w < 5; ++w) {
        double prev = 0.0, cur = 0.0;
        for (int i = 0; i < 10; ++i) {
            prev += result.metrics[(w - 1) * 10 + i].kl;
            cur += result.metrics[w * 10 + i].kl;
        }
        CHECK(cur <= prev + 1e-3);
    }
}

TEST_CASE("training improves over the phase-1 policy on the degenerate task") {
    const NoiseSchedule sched = make_linear_schedule(6);
    const HyperSpace space = default_space();
    std::vector<EditTask> tasks;
    for (int seed = 0; seed < 4; ++seed) tasks.push_back(generate_task(degenerate_gen(), seed));

    Phase1Config p1;
    p1.steps = 300;
    p1.lr = 2e-3;
    PolicyParams theta1 = init_net(policy_net_config(tasks[0].dim(), space), 60);
    theta1 = pretrain_phase1(std::move(theta1), space, tasks, sched, p1, 61);

    PpoConfig cfg;
    cfg.episodes = 400;
    cfg.batch_episodes = 8;
    cfg.epochs_per_batch = 4;

    RewardConfig reward_cfg;
    ValueParams value = init_net(value_net_config(tasks[0].dim()), 62);
    const TrainResult result =
        train_phase2(theta1, theta1, value, tasks, space, sched, reward_cfg, cfg, 63);

    auto mean_eval_reward = [&](const PolicyParams& policy) {
        double total = 0.0;
        int n = 0;
        for (int episode = 0; episode < 100; ++episode) {
            Rng rng(derive_seed(900, "eval", episode));
            const auto& task = tasks[episode % tasks.size()];
            const Trajectory traj = collect_trajectory(policy, nullptr, nullptr, task, space,
                                                       sched, reward_cfg, rng, false);
            total += traj.reward.total;
            ++n;
        }
        return total / n;
    };

    const double before = mean_eval_reward(theta1);
    const double after = mean_eval_reward(result.policy);
    CHECK(after >= before);

    // reward trend over training: last quarter above the first quarter
    const std::size_t quarter = result.metrics.size() / 4;
    double head = 0.0, tail = 0.0;
    for (std::size_t i = 0; i < quarter; ++i) {
        head += result.metrics[i].reward_total;
        tail += result.metrics[result.metrics.size() - 1 - i].reward_total;
    }
    CHECK(tail > head);
}

TEST_CASE("non-finite rewards abort with a numeric failure") {
    const NoiseSchedule sched = make_linear_schedule(4);
    const HyperSpace space = default_space();
    std::vector<EditTask> tasks{generate_task(GenConfig{}, 1)};

    PolicyParams theta1 = init_net(policy_net_config(tasks[0].dim(), space), 70);
    ValueParams value = init_net(value_net_config(tasks[0].dim()), 71);

    PpoConfig cfg;
    cfg.episodes = 4;
    cfg.batch_episodes = 4;

    RewardConfig reward_cfg;
    reward_cfg.alpha = std::numeric_limits<double>::infinity();  // reward blows up
    CHECK_THROWS_AS(
        train_phase2(theta1, theta1, value, tasks, space, sched, reward_cfg, cfg, 7),
        NumericError);
}
