#include <doctest.h>

#include <cmath>
#include <map>
#include <stdexcept>

#include "autoedit/hyperspace.hpp"

using namespace autoedit;

TEST_CASE("default space shape") {
    const HyperSpace space = default_space();
    validate_space(space);
    REQUIRE(space.num_heads() == 3);
    CHECK(space.heads[0].kind == HeadKind::PromptSwitch);
    CHECK(space.heads[1].kind == HeadKind::BinaryGate);
    CHECK(space.heads[2].kind == HeadKind::DiscreteScalar);
    CHECK(space.heads[2].values == std::vector<double>{0.5, 1.0, 1.5, 2.0, 3.0, 5.0});
    CHECK(space.heads[2].values[space.heads[2].default_index] == 1.0);
}

TEST_CASE("space validation rejects bad heads") {
    HyperSpace space;
    CHECK_THROWS_AS(validate_space(space), std::invalid_argument);
    space.heads.push_back({"p", HeadKind::PromptSwitch, {0.0}, 0});
    CHECK_THROWS_AS(validate_space(space), std::invalid_argument);
    space.heads[0].values = {0.0, 1.0};
    space.heads[0].default_index = 2;
    CHECK_THROWS_AS(validate_space(space), std::invalid_argument);
    space.heads[0].default_index = 0;
    CHECK_NOTHROW(validate_space(space));
    // a one-value scalar head is allowed
    space.heads.push_back({"w", HeadKind::DiscreteScalar, {1.0}, 0});
    CHECK_NOTHROW(validate_space(space));
}

TEST_CASE("global_to_perstep prompt schedule") {
    const HyperSpace space = default_space();
    const int T = 10;

    SUBCASE("r=0 is all source") {
        const auto actions = global_to_perstep({0, 0.0, 1}, T, space);
        for (const auto& a : actions) CHECK(a.indices[0] == 0);
    }
    SUBCASE("r=T is all edit") {
        const auto actions = global_to_perstep({T, 0.0, 1}, T, space);
        for (const auto& a : actions) CHECK(a.indices[0] == 1);
    }
    SUBCASE("r=4 gives 6 source then 4 edit steps") {
        const auto actions = global_to_perstep({4, 0.0, 1}, T, space);
        for (int k = 0; k < 6; ++k) CHECK(actions[k].indices[0] == 0);
        for (int k = 6; k < 10; ++k) CHECK(actions[k].indices[0] == 1);
    }
    SUBCASE("gate is an on-prefix of floor(ratio*T) steps") {
        const auto actions = global_to_perstep({5, 0.3, 1}, T, space);
        for (int k = 0; k < 3; ++k) CHECK(actions[k].indices[1] == 1);
        for (int k = 3; k < 10; ++k) CHECK(actions[k].indices[1] == 0);
    }
    SUBCASE("scale head is constant") {
        const auto actions = global_to_perstep({5, 0.5, 4}, T, space);
        for (const auto& a : actions) CHECK(a.indices[2] == 4);
    }
    SUBCASE("r beyond T rejected") {
        CHECK_THROWS_AS(global_to_perstep({11, 0.0, 1}, T, space), std::invalid_argument);
    }
    SUBCASE("every produced action is index-valid") {
        for (int r = 0; r <= T; ++r)
            for (double g : {0.0, 0.15, 0.5, 1.0})
                for (const auto& a : global_to_perstep({r, g, 3}, T, space))
                    CHECK(action_valid(space, a));
    }
}

TEST_CASE("perstep_to_inversion_step") {
    const HyperSpace space = default_space();
    const int T = 10;

    CHECK(perstep_to_inversion_step(space, global_to_perstep({0, 0.0, 1}, T, space)) == 0);
    CHECK(perstep_to_inversion_step(space, global_to_perstep({T, 0.0, 1}, T, space)) == T);
    for (int r = 0; r <= T; ++r)
        CHECK(perstep_to_inversion_step(space, global_to_perstep({r, 0.4, 2}, T, space)) == r);

    CHECK_THROWS_AS(perstep_to_inversion_step(space, {}), std::invalid_argument);
}

TEST_CASE("interpret maps heads to semantics") {
    const HyperSpace space = default_space();
    const StepSemantics sem = interpret(space, StepAction{{1, 1, 5}});
    CHECK(sem.edit_prompt);
    CHECK(sem.gate_on);
    CHECK(sem.scale == 5.0);
    const StepSemantics sem2 = interpret(space, StepAction{{0, 0, 0}});
    CHECK_FALSE(sem2.edit_prompt);
    CHECK_FALSE(sem2.gate_on);
    CHECK(sem2.scale == 0.5);
    CHECK_THROWS_AS(interpret(space, StepAction{{2, 0, 0}}), std::invalid_argument);
}

TEST_CASE("prior sampling ranges") {
    const HyperSpace space = default_space();
    const PriorConfig prior;

    SUBCASE("T=50 keeps r within [18, 47]") {
        const auto [lo, hi] = prior_r_support(prior, 50);
        CHECK(lo == 18);
        CHECK(hi == 47);
        // the absolute-form range [50-0.65T, 50-0.05T] = [17.5, 47.5] brackets
        // the same integers at T=50
        CHECK(50.0 - 0.65 * 50 <= lo);
        CHECK(hi <= 50.0 - 0.05 * 50);
        Rng rng(123);
        for (int i = 0; i < 2000; ++i) {
            const GlobalConfig cfg = sample_prior(space, 50, prior, rng);
            CHECK(cfg.r >= 18);
            CHECK(cfg.r <= 47);
            CHECK(cfg.gate_ratio >= 0.2);
            CHECK(cfg.gate_ratio <= 0.8);
        }
    }
    SUBCASE("scale head always gets its default index") {
        Rng rng(5);
        for (int i = 0; i < 100; ++i) {
            const GlobalConfig cfg = sample_prior(space, 10, prior, rng);
            CHECK(cfg.scale_index == space.heads[2].default_index);
            CHECK(space.heads[2].values[cfg.scale_index] == 1.0);
        }
    }
    SUBCASE("empirical r pmf is close to uniform") {
        const auto [lo, hi] = prior_r_support(prior, 10);
        const int support = hi - lo + 1;
        std::map<int, int> counts;
        const int n = 10000;
        for (int seed = 0; seed < n; ++seed) {
            Rng rng(static_cast<std::uint64_t>(seed));
            ++counts[sample_prior(space, 10, prior, rng).r];
        }
        double tv = 0.0;
        for (int r = lo; r <= hi; ++r)
            tv += std::abs(counts[r] / static_cast<double>(n) - 1.0 / support);
        tv *= 0.5;
        CHECK(tv <= 0.03);
    }
}
