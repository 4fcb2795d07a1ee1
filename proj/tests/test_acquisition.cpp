#include <catch2/catch_amalgamated.hpp>

#include <deque>

#include <featq/rl/cost_schedule.hpp>
#include <featq/rl/exploration.hpp>
#include <featq/rl/masked_sample.hpp>
#include <featq/rl/replay.hpp>
#include <featq/rl/reward.hpp>
#include <featq/rl/trainer.hpp>

using namespace featq;

TEST_CASE("cost schedule validates its partition") {
    REQUIRE_NOTHROW(CostSchedule({{0, 2}, {1}}, {3.0, 1.0}));
    REQUIRE_THROWS_AS(CostSchedule({{0}, {0}}, {1.0, 1.0}), InputError);
    REQUIRE_THROWS_AS(CostSchedule({{0}}, {1.0, 2.0}), ShapeError);
    REQUIRE_THROWS_AS(CostSchedule({{0, 2}}, {1.0}), InputError); // 1 uncovered
    REQUIRE_THROWS_AS(CostSchedule({{0}}, {-1.0}), InputError);
    REQUIRE_THROWS_AS(CostSchedule({}, {}), ShapeError);

    const auto s = CostSchedule::uniform(5, 2.0);
    REQUIRE(s.n_features() == 5);
    REQUIRE(s.n_groups() == 5);
    REQUIRE(s.total_cost() == 10.0);
    REQUIRE(s.max_cost() == 2.0);
    REQUIRE(s.group_of(3) == 3);

    const CostSchedule f({{0}, {1}, {2}}, {1.0, 0.0, 2.0});
    REQUIRE(f.free_groups() == std::vector<int>{1});
}

TEST_CASE("acquisition cost charges each newly completed group once") {
    const CostSchedule s({{0, 1}, {2}, {3}}, {5.0, 1.0, 2.0});
    const std::vector<std::uint8_t> none{0, 0, 0, 0};
    const std::vector<std::uint8_t> bundle{1, 1, 0, 0};
    const std::vector<std::uint8_t> all{1, 1, 1, 1};
    REQUIRE(acquisition_cost(none, none, s) == 0.0);
    REQUIRE(acquisition_cost(bundle, none, s) == 5.0);
    REQUIRE(acquisition_cost(all, none, s) == 8.0);
    REQUIRE(acquisition_cost(all, bundle, s) == 3.0);

    const std::vector<std::uint8_t> partial{1, 0, 0, 0};
    REQUIRE_THROWS_AS(acquisition_cost(partial, none, s), InputError);
    REQUIRE_THROWS_AS(acquisition_cost(none, bundle, s), InputError); // regression
    REQUIRE_THROWS_AS(acquisition_cost({1, 1}, {0, 0}, s), ShapeError);
}

TEST_CASE("masked sample acquisition copies values and records order") {
    const CostSchedule s({{0, 1}, {2}}, {2.0, 1.0});
    MaskedSample ms(3);
    REQUIRE(ms.observed_count() == 0);
    REQUIRE(std::isnan(ms.value(0)));

    Eigen::VectorXd oracle(3);
    oracle << 1.5, std::numeric_limits<double>::quiet_NaN(), -2.0;
    acquire(ms, 0, s, oracle, 0);
    REQUIRE(ms.has(0));
    REQUIRE(ms.has(1));
    REQUIRE_FALSE(ms.has(2));
    REQUIRE(ms.value(0) == 1.5);
    REQUIRE(std::isnan(ms.value(1))); // missing at the source passes through
    REQUIRE(ms.observed_count() == 2);

    REQUIRE_THROWS_AS(acquire(ms, 0, s, oracle, 1), InvalidActionError);
    REQUIRE_THROWS_AS(acquire(ms, 5, s, oracle, 1), InvalidActionError);

    acquire(ms, 1, s, oracle, 1);
    REQUIRE(ms.order().size() == 2);
    REQUIRE(ms.order()[0].group == 0);
    REQUIRE(ms.order()[0].step == 0);
    REQUIRE(ms.order()[1].group == 1);
    REQUIRE(group_owned(ms, s, 0));
}

TEST_CASE("replay memory is an exact fifo ring") {
    ReplayMemory<float> mem(16);
    std::deque<int> model;
    for (int i = 0; i < 1000; ++i) {
        Experience<float> e;
        e.action = i;
        mem.push(std::move(e));
        model.push_back(i);
        if (model.size() > 16) model.pop_front();
        REQUIRE(mem.size() == model.size());
        for (std::size_t k = 0; k < model.size(); ++k)
            REQUIRE(mem.at(k).action == model[k]);
    }
    REQUIRE_THROWS_AS(mem.at(16), InputError);
    REQUIRE_THROWS_AS(ReplayMemory<float>(0), InputError);
}

TEST_CASE("replay sampling returns distinct in-range indices") {
    ReplayMemory<float> mem(64);
    for (int i = 0; i < 40; ++i) {
        Experience<float> e;
        e.action = i;
        mem.push(std::move(e));
    }
    Rng rng(5);
    for (int rep = 0; rep < 200; ++rep) {
        auto idx = mem.sample_indices(17, rng);
        REQUIRE(idx.size() == 17);
        std::sort(idx.begin(), idx.end());
        REQUIRE(std::adjacent_find(idx.begin(), idx.end()) == idx.end());
        REQUIRE(idx.back() < 40);
    }
    auto all = mem.sample_indices(40, rng);
    std::sort(all.begin(), all.end());
    for (std::size_t i = 0; i < 40; ++i) REQUIRE(all[i] == i);
    REQUIRE_THROWS_AS(mem.sample_indices(41, rng), InputError);
}

TEST_CASE("exploration probability is exactly max(floor, decay^i)") {
    ExplorationSchedule sched(0.97, 0.1);
    REQUIRE(sched.probability() == 1.0);
    for (int i = 1; i <= 200; ++i) {
        sched.advance();
        REQUIRE(sched.probability() ==
                std::max(0.1, std::pow(0.97, static_cast<double>(i))));
    }
    REQUIRE(sched.probability() == 0.1); // 0.97^200 is far below the floor

    ExplorationSchedule restored(0.97, 0.1);
    restored.restore(70); // 0.97^70 sits just above the floor
    REQUIRE(restored.probability() == std::pow(0.97, 70.0));
    REQUIRE_THROWS_AS(ExplorationSchedule(0.0), InputError);
    REQUIRE_THROWS_AS(ExplorationSchedule(0.5, 1.5), InputError);
}

TEST_CASE("certainty-change reward is the norm of the shift per unit cost") {
    CertaintyEstimate before, after;
    before.probabilities.resize(2);
    before.probabilities << 0.5, 0.5;
    after.probabilities.resize(2);
    after.probabilities << 0.9, 0.1;
    REQUIRE_THAT(acquisition_reward(before, after, 2.0),
                 Catch::Matchers::WithinRel(std::sqrt(0.32) / 2.0, 1e-14));
    REQUIRE(acquisition_reward(before, before, 1.0) == 0.0);
    REQUIRE_THROWS_AS(acquisition_reward(before, after, 0.0), InputError);
    CertaintyEstimate wide;
    wide.probabilities.resize(3);
    REQUIRE_THROWS_AS(acquisition_reward(before, wide, 1.0), ShapeError);
}

TEST_CASE("baseline reward is cost penalty plus terminal correctness bonus") {
    REQUIRE(baseline_reward(true, 2.0, RewardStep::Acquisition) == -2.0);
    REQUIRE(baseline_reward(false, 2.0, RewardStep::Terminal) == -2.0);
    REQUIRE(baseline_reward(true, 2.0, RewardStep::Terminal) == -1.0);
    REQUIRE(baseline_reward(true, 0.5, RewardStep::Terminal, 3.0) == 2.5);
}

TEST_CASE("action selection: validity, greed, exploration, and draw budget") {
    const CostSchedule s = CostSchedule::uniform(4, 1.0);
    Eigen::VectorXd qv(4);
    qv << 0.1, 0.9, 0.9, 0.3;

    Rng rng(1);
    SECTION("greedy picks the best valid group, ties to the lowest index") {
        const auto c = select_action(qv, {0, 0, 0, 0}, s, 0.0, 10.0, false, rng);
        REQUIRE(c);
        REQUIRE(c->group == 1);
        REQUIRE_FALSE(c->explored);
    }
    SECTION("owned groups are skipped") {
        const auto c = select_action(qv, {0, 1, 0, 0}, s, 0.0, 10.0, false, rng);
        REQUIRE(c->group == 2);
    }
    SECTION("strict mode filters unaffordable groups") {
        const CostSchedule pricey({{0}, {1}, {2}, {3}}, {1.0, 5.0, 5.0, 1.0});
        const auto c =
            select_action(qv, {0, 0, 0, 0}, pricey, 0.0, 2.0, true, rng);
        REQUIRE(c->group == 3);
        const auto none =
            select_action(qv, {1, 0, 0, 1}, pricey, 0.0, 2.0, true, rng);
        REQUIRE_FALSE(none.has_value());
    }
    SECTION("no valid group consumes no draws") {
        Rng a(7), b(7);
        const auto none = select_action(qv, {1, 1, 1, 1}, s, 0.5, 10.0, false, a);
        REQUIRE_FALSE(none.has_value());
        REQUIRE(a.uniform01() == b.uniform01());
    }
    SECTION("greedy consumes one draw, exploration two") {
        Rng a(8), b(8);
        (void)select_action(qv, {0, 0, 0, 0}, s, 0.0, 10.0, false, a);
        (void)b.uniform01();
        REQUIRE(a.uniform01() == b.uniform01());

        Rng c(9), d(9);
        (void)select_action(qv, {0, 0, 0, 0}, s, 1.0, 10.0, false, c);
        (void)d.uniform01();
        (void)d.uniform01();
        REQUIRE(c.uniform01() == d.uniform01());
    }
    SECTION("forced exploration stays within the valid set") {
        Rng r(10);
        for (int i = 0; i < 200; ++i) {
            const auto c = select_action(qv, {0, 1, 0, 1}, s, 1.0, 10.0, false, r);
            REQUIRE(c->explored);
            REQUIRE((c->group == 0 || c->group == 2));
        }
    }
}

TEST_CASE("bellman target honors terminal flags and ownership") {
    Eigen::VectorXd tv(3);
    tv << 1.0, 5.0, 3.0;
    REQUIRE(q_target(tv, 2.0, true, {0, 0, 0}, 0.9) == 2.0);
    REQUIRE(q_target(tv, 2.0, false, {0, 0, 0}, 0.9) == 2.0 + 0.9 * 5.0);
    REQUIRE(q_target(tv, 2.0, false, {0, 1, 0}, 0.9) == 2.0 + 0.9 * 3.0);
    REQUIRE(q_target(tv, 2.0, false, {1, 1, 1}, 0.9) == 2.0);
    REQUIRE(q_target(tv, 2.0, false, {0, 0, 0}, 0.0) == 2.0);
    REQUIRE_THROWS_AS(q_target(tv, 0.0, false, {0, 0}, 0.9), ShapeError);
}
