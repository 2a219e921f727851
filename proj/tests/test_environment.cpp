#include <doctest.h>

#include <cmath>

#include "autoedit/environment.hpp"
#include "autoedit/errors.hpp"
#include "autoedit/reward.hpp"

using namespace autoedit;

namespace {

// two-coordinate task with mask (1,0); fields chosen per test
EditTask tiny_task(double leak, double kappa, double damp = 0.7, double suppress = 0.0) {
    EditTask task;
    task.i_src = {0.0, 0.0};
    task.c_edit = {1.0, 1.0};
    task.drift = {1.0, 1.0};
    task.mask = {1.0, 0.0};
    task.leak_rho = leak;
    task.pull_kappa = kappa;
    task.gate_damp = damp;
    task.gate_suppress = suppress;
    task.eps_star = {0.0, 0.0};
    task.seed = 0;
    return task;
}

double in_mask_dist2(const Vec& x, const EditTask& task) {
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (task.mask[i] == 1.0) {
            const double d = x[i] - task.c_edit[i];
            sum += d * d;
        }
    return sum;
}

}  // namespace

TEST_CASE("invert is the closed-form noisy source latent") {
    const NoiseSchedule sched = make_linear_schedule(10);

    SUBCASE("zero inversion noise") {
        EditTask task = tiny_task(0.3, 0.2);
        const LatentState state = invert(task, sched);
        CHECK(state.t == 10);
        const double a = std::sqrt(sched.alpha_bar[10]);
        CHECK(state.x[0] == doctest::Approx(a * task.i_src[0]).epsilon(1e-14));
    }
    SUBCASE("scalar arithmetic matches the forward example") {
        EditTask task = tiny_task(0.3, 0.2);
        task.i_src = {1.0, 1.0};
        task.drift = {2.0, 2.0};
        task.eps_star = {1.0, 1.0};
        const LatentState state = invert(task, sched);
        CHECK(state.x[0] == doctest::Approx(1.254974).epsilon(1e-6));
    }
    SUBCASE("implied_x0 of the inversion recovers i_src") {
        const EditTask task = generate_task(GenConfig{}, 11);
        const LatentState state = invert(task, sched);
        const Vec back = implied_x0(state.x, sched.T, task.eps_star, sched);
        for (int i = 0; i < task.dim(); ++i)
            CHECK(std::abs(back[i] - task.i_src[i]) <= 1e-9);
    }
}

TEST_CASE("edit_pull_target semantics") {
    const EditTask task = tiny_task(0.3, 0.2, 0.7, 0.0);

    SUBCASE("source prompt ignores gate and scale") {
        for (bool gate : {false, true}) {
            const PullTarget pull = edit_pull_target(task, StepSemantics{false, gate, 5.0});
            CHECK(pull.target == task.i_src);
            CHECK(pull.weight_mask == Vec{1.0, 1.0});
        }
    }
    SUBCASE("edit prompt leaks outside the mask") {
        const PullTarget pull = edit_pull_target(task, StepSemantics{true, false, 1.0});
        CHECK(pull.target == Vec{1.0, 1.0});
        CHECK(pull.weight_mask == Vec{1.0, 0.3});
    }
    SUBCASE("gate damps inside and suppresses outside") {
        const PullTarget pull = edit_pull_target(task, StepSemantics{true, true, 1.0});
        CHECK(pull.weight_mask == Vec{0.7, 0.0});
    }
}

TEST_CASE("denoise_step matches the scalar reference evaluation") {
    // D=2, mask=(1,0), leak 0.3, kappa 0.15, w=1, gate off, t=1, eps=0,
    // implied x0 = (0,0), targets 1 -> x_0 = (0.15, 0.045)
    const NoiseSchedule sched = make_linear_schedule(10);
    EditTask task = tiny_task(0.3, 0.15);

    HyperSpace space = default_space();
    const StepAction action{{1, 0, 1}};  // edit, gate off, w=1.0
    const LatentState x{{0.0, 0.0}, 1};

    std::int64_t nfe = 0;
    const LatentState next = denoise_step(x, task, space, action, sched, &nfe);
    CHECK(nfe == 1);
    CHECK(next.t == 0);
    CHECK(next.x[0] == doctest::Approx(0.15).epsilon(1e-12));
    CHECK(next.x[1] == doctest::Approx(0.045).epsilon(1e-12));

    SUBCASE("t=0 rejected") {
        CHECK_THROWS_AS(denoise_step(next, task, space, action, sched, &nfe),
                        std::invalid_argument);
    }
}

TEST_CASE("source steps are lossless restorers") {
    const NoiseSchedule sched = make_linear_schedule(10);
    const HyperSpace space = default_space();
    const EditTask task = generate_task(GenConfig{}, 21);

    // at the source fixed point the implied x0 never moves
    LatentState state = invert(task, sched);
    std::int64_t nfe = 0;
    for (int t = sched.T; t >= 1; --t)
        state = denoise_step(state, task, space, StepAction{{0, 0, 1}}, sched, &nfe);
    for (int i = 0; i < task.dim(); ++i)
        CHECK(std::abs(state.x[i] - task.i_src[i]) <= 1e-9);
}

TEST_CASE("zero pull rate reduces to pure reconstruction") {
    const NoiseSchedule sched = make_linear_schedule(10);
    const HyperSpace space = default_space();
    EditTask task = generate_task(GenConfig{}, 22);
    task.pull_kappa = 0.0;

    const auto actions = global_to_perstep({10, 0.5, 5}, sched.T, space);
    const EpisodeRecord episode = rollout(task, space, sched, sequence_provider(actions));
    for (int i = 0; i < task.dim(); ++i)
        CHECK(std::abs(episode.final_x0[i] - task.i_src[i]) <= 1e-9);
}

TEST_CASE("rollout accounting and the all-source baseline") {
    const NoiseSchedule sched = make_linear_schedule(10);
    const HyperSpace space = default_space();

    SUBCASE("nfe equals T and states run t=T..1") {
        const EditTask task = generate_task(GenConfig{}, 30);
        const auto actions = global_to_perstep({0, 0.0, 1}, sched.T, space);
        const EpisodeRecord episode = rollout(task, space, sched, sequence_provider(actions));
        CHECK(episode.nfe_count == 10);
        REQUIRE(episode.states.size() == 10);
        for (int k = 0; k < 10; ++k) CHECK(episode.states[k].t == 10 - k);
    }
    SUBCASE("all-source rollouts preserve the background exactly") {
        for (int seed = 0; seed < 10; ++seed) {
            const EditTask task = generate_task(GenConfig{}, 100 + seed);
            const auto actions = global_to_perstep({0, 0.0, 1}, sched.T, space);
            const EpisodeRecord episode =
                rollout(task, space, sched, sequence_provider(actions));
            CHECK(out_of_mask_mse(episode.final_x0, task) <= 1e-12);
            for (int i = 0; i < task.dim(); ++i)
                CHECK(std::abs(episode.final_x0[i] - task.i_src[i]) <= 1e-9);
        }
    }
    SUBCASE("provider exhaustion is a hard error") {
        const EditTask task = generate_task(GenConfig{}, 31);
        auto actions = global_to_perstep({0, 0.0, 1}, sched.T, space);
        actions.pop_back();
        CHECK_THROWS_AS(rollout(task, space, sched, sequence_provider(actions)), DataError);
    }
    SUBCASE("all-edit beats all-source on in-mask distance when leak is zero") {
        GenConfig cfg;
        cfg.leak_lo = cfg.leak_hi = 0.0;
        for (int seed = 0; seed < 5; ++seed) {
            const EditTask task = generate_task(cfg, 200 + seed);
            const EpisodeRecord all_edit = rollout(
                task, space, sched,
                sequence_provider(global_to_perstep({10, 0.0, 1}, sched.T, space)));
            const EpisodeRecord all_src = rollout(
                task, space, sched,
                sequence_provider(global_to_perstep({0, 0.0, 1}, sched.T, space)));
            CHECK(in_mask_dist2(all_edit.final_x0, task) <
                  in_mask_dist2(all_src.final_x0, task));
        }
    }
}

TEST_CASE("edit steps strictly shrink in-mask error when leak and gate are off") {
    const NoiseSchedule sched = make_linear_schedule(10);
    const HyperSpace space = default_space();
    GenConfig cfg;
    cfg.leak_lo = cfg.leak_hi = 0.0;

    for (int scale_idx = 0; scale_idx < 6; ++scale_idx) {
        const EditTask task = generate_task(cfg, 300 + scale_idx);
        LatentState state = invert(task, sched);
        std::int64_t nfe = 0;
        double prev = in_mask_dist2(implied_x0(state.x, state.t, task.eps_star, sched), task);
        for (int t = sched.T; t >= 1; --t) {
            state = denoise_step(state, task, space, StepAction{{1, 0, scale_idx}}, sched,
                                 &nfe);
            const Vec x0 = t == 1 ? state.x
                                  : implied_x0(state.x, state.t, task.eps_star, sched);
            const double cur = in_mask_dist2(x0, task);
            if (prev > 1e-300) CHECK(cur < prev);
            prev = cur;
        }
    }
}
