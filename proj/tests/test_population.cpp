#include <algorithm>

#include <gtest/gtest.h>

#include "usd/population.hpp"

using namespace usd;

namespace {

ProtocolParams paramsFor(Count n, Count k, std::uint64_t seed = 1) {
    ProtocolParams p;
    p.n = n;
    p.k = k;
    p.seed = seed;
    return p;
}

Count bruteForceSpread(std::span<const PopulationAgentState> agents, Count m) {
    Count best = 0;
    for (const auto& a : agents) {
        for (const auto& b : agents) best = std::max(best, clockDistCircular(a.clock, b.clock, m));
    }
    return best;
}

}  // namespace

TEST(CircularClock, OrderExamples) {
    EXPECT_TRUE(clockLeqCircular(3, 5, 12));
    EXPECT_TRUE(clockLeqCircular(10, 1, 12));
    EXPECT_FALSE(clockLeqCircular(1, 10, 12));
    EXPECT_TRUE(clockLeqCircular(4, 4, 12));
}

TEST(CircularClock, DistanceExamples) {
    EXPECT_EQ(clockDistCircular(0, 0, 12), 0);
    EXPECT_EQ(clockDistCircular(1, 11, 12), 2);
    EXPECT_EQ(clockDistCircular(3, 9, 12), 6);
}

TEST(CircularClock, DistanceIsAMetricOnTheCircle) {
    const Count m = 24;
    for (Count a = 0; a < m; ++a) {
        for (Count b = 0; b < m; ++b) {
            const Count d = clockDistCircular(a, b, m);
            EXPECT_EQ(d, clockDistCircular(b, a, m));
            EXPECT_EQ(d == 0, a == b);
            EXPECT_LE(d, m / 2);
            // within a half circle exactly one direction holds, unless equal
            if (a != b && 2 * d < m) {
                EXPECT_NE(clockLeqCircular(a, b, m), clockLeqCircular(b, a, m));
            }
            for (Count c = 0; c < m; c += 5) EXPECT_LE(d, clockDistCircular(a, c, m) + clockDistCircular(c, b, m));
        }
    }
}

TEST(CircularSpread, Examples) {
    std::vector<Count> h(12, 0);
    h[4] = 3;
    EXPECT_EQ(maxCircularSpread(h), 0);
    h[4] = 0;
    h[0] = 1;
    h[6] = 1;
    EXPECT_EQ(maxCircularSpread(h), 6);
    EXPECT_EQ(maxCircularSpread(std::vector<Count>(12, 0)), 0);
    EXPECT_THROW(maxCircularSpread(std::vector<Count>(7, 1)), std::invalid_argument);
}

TEST(CircularSpread, MatchesPairwiseBruteForce) {
    Rng rng(5);
    for (int trial = 0; trial < 2000; ++trial) {
        const Count m = 2 * static_cast<Count>(1 + uniformBelow(rng, 20));
        std::vector<Count> h(static_cast<std::size_t>(m), 0);
        std::vector<Count> clocks;
        const auto occupied = 1 + uniformBelow(rng, 6);
        for (std::uint64_t i = 0; i < occupied; ++i) {
            const auto c = static_cast<Count>(uniformBelow(rng, static_cast<std::uint64_t>(m)));
            ++h[c];
            clocks.push_back(c);
        }
        Count expected = 0;
        for (Count a : clocks) {
            for (Count b : clocks) expected = std::max(expected, clockDistCircular(a, b, m));
        }
        ASSERT_EQ(maxCircularSpread(h), expected) << "m=" << m;
    }
}

TEST(PopulationSim, ModulusAndThreshold) {
    PopulationSim sim(paramsFor(1024, 2), Configuration({512, 512}));
    EXPECT_EQ(sim.unit(), 40);
    EXPECT_EQ(sim.modulus(), 240);
    EXPECT_EQ(sim.decisionThreshold(), 80);
    EXPECT_EQ(clockUnit(1, 4.0), 1);
}

TEST(Interact, DecisionBranch) {
    std::vector<PopulationAgentState> agents{{0, 0, false, false}, {0, 1, false, false}};
    PopulationSim sim(paramsFor(2, 2), agents, 2);
    sim.interact(0, 1);
    const auto& u = sim.agents()[0];
    EXPECT_TRUE(u.undecided);
    EXPECT_TRUE(u.decisionFlag);
    EXPECT_EQ(u.clock, 1);
    EXPECT_EQ(sim.agents()[1].clock, 0);
    EXPECT_EQ(sim.undecidedCount(), 1);
}

TEST(Interact, DecisionHappensOncePerPhase) {
    std::vector<PopulationAgentState> agents{{0, 0, false, false}, {5, 0, false, false}, {5, 1, false, false}};
    PopulationSim sim(paramsFor(3, 2), agents, 2);
    sim.interact(0, 1);
    EXPECT_FALSE(sim.agents()[0].undecided);
    sim.interact(0, 2);  // flag set, so a differing partner no longer matters
    EXPECT_FALSE(sim.agents()[0].undecided);
}

TEST(Interact, BoostingBranchAdopts) {
    const auto threshold = static_cast<std::int32_t>(2 * clockUnit(2, 4.0));
    std::vector<PopulationAgentState> agents{{threshold, 0, true, true}, {threshold, 1, false, false}};
    PopulationSim sim(paramsFor(2, 2), agents, 2);
    sim.interact(0, 1);
    const auto& u = sim.agents()[0];
    EXPECT_FALSE(u.undecided);
    EXPECT_EQ(u.opinion, 1);
    EXPECT_FALSE(u.decisionFlag);
    EXPECT_EQ(sim.configuration(), Configuration({0, 2}));
}

TEST(Interact, BoostingFromUndecidedPartnerDoesNothing) {
    const auto threshold = static_cast<std::int32_t>(2 * clockUnit(2, 4.0));
    std::vector<PopulationAgentState> agents{{threshold, 0, true, true}, {threshold, 1, true, true}};
    PopulationSim sim(paramsFor(2, 2), agents, 2);
    sim.interact(0, 1);
    EXPECT_TRUE(sim.agents()[0].undecided);
    EXPECT_EQ(sim.agents()[0].opinion, 0);
}

TEST(Interact, FlagResetScope) {
    const auto threshold = static_cast<std::int32_t>(2 * clockUnit(2, 4.0));
    std::vector<PopulationAgentState> agents{{threshold, 0, true, false}, {threshold, 0, false, false}};
    PopulationSim intent(paramsFor(2, 1), agents, 1);
    intent.interact(0, 1);
    EXPECT_FALSE(intent.agents()[0].decisionFlag);

    auto p = paramsFor(2, 1);
    p.literalPseudocode = true;
    PopulationSim literal(p, agents, 1);
    literal.interact(0, 1);
    EXPECT_TRUE(literal.agents()[0].decisionFlag);
}

TEST(Interact, SelfInteractionKeepsAgentDecided) {
    std::vector<PopulationAgentState> agents{{0, 0, false, false}, {0, 1, false, false}};
    PopulationSim sim(paramsFor(2, 2), agents, 2);
    sim.interact(1, 1);
    EXPECT_FALSE(sim.agents()[1].undecided);
    EXPECT_TRUE(sim.agents()[1].decisionFlag);
    EXPECT_EQ(sim.agents()[1].clock, 1);
}

TEST(Interact, LaterClockTicksTheEarlierOne) {
    std::vector<PopulationAgentState> agents{{7, 0, false, false}, {3, 0, false, false}};
    PopulationSim sim(paramsFor(2, 1), agents, 1);
    sim.interact(0, 1);
    EXPECT_EQ(sim.agents()[0].clock, 7);
    EXPECT_EQ(sim.agents()[1].clock, 4);
}

TEST(Step, SingleAgentBecomesDecided) {
    PopulationSim sim(paramsFor(1, 1), Configuration({1}));
    sim.step();
    EXPECT_FALSE(sim.agents()[0].undecided);
    EXPECT_EQ(sim.interactions(), 1);
}

TEST(Step, ParallelTimeCountsInteractionsOverN) {
    PopulationSim sim(paramsFor(50, 2), Configuration({25, 25}));
    for (int i = 0; i < 50; ++i) sim.step();
    EXPECT_DOUBLE_EQ(sim.parallelTime(), 1.0);
    for (int i = 0; i < 50; ++i) sim.step();
    EXPECT_DOUBLE_EQ(sim.parallelTime(), 2.0);
}

TEST(Step, NoSelfInteractionNeverPairsAnAgentWithItself) {
    // a self-pair would leave the initiator decided
    auto p = paramsFor(2, 2);
    p.allowSelfInteraction = false;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        p.seed = seed;
        PopulationSim sim(p, Configuration({1, 1}));
        sim.step();
        EXPECT_EQ(sim.undecidedCount(), 1);
    }
}

TEST(PopulationProperties, ClockMovesExactlyOnceAndCountersStayConsistent) {
    auto p = paramsFor(40, 4, 9);
    PopulationSim sim(p, Configuration({10, 10, 10, 10}));
    const Count m = sim.modulus();
    auto previous = std::vector<PopulationAgentState>(sim.agents().begin(), sim.agents().end());
    std::size_t nonzero = 4;
    for (int i = 0; i < 20000; ++i) {
        sim.step();
        Count changed = 0;
        Count undecided = 0;
        std::vector<Count> hist(static_cast<std::size_t>(m), 0);
        for (std::size_t a = 0; a < previous.size(); ++a) {
            const auto& now = sim.agents()[a];
            ASSERT_GE(now.clock, 0);
            ASSERT_LT(now.clock, m);
            if (now.clock != previous[a].clock) {
                ++changed;
                ASSERT_EQ(now.clock, (previous[a].clock + 1) % m);
            }
            undecided += now.undecided ? 1 : 0;
            ++hist[now.clock];
        }
        ASSERT_EQ(changed, 1);
        ASSERT_EQ(undecided, sim.undecidedCount());
        ASSERT_TRUE(std::equal(hist.begin(), hist.end(), sim.clockHistogram().begin()));
        if (i % 97 == 0) {
            ASSERT_EQ(sim.maxClockSpread(), bruteForceSpread(sim.agents(), m));
        }
        const std::size_t nowNonzero = sim.configuration().nonzero();
        ASSERT_LE(nowNonzero, nonzero);
        nonzero = nowNonzero;
        previous.assign(sim.agents().begin(), sim.agents().end());
    }
}

TEST(PopulationProperties, SingleOpinionNeverUndecidedWithSelfInteraction) {
    PopulationSim sim(paramsFor(30, 1, 4), Configuration({30}));
    for (int i = 0; i < 30000; ++i) {
        sim.step();
        ASSERT_EQ(sim.undecidedCount(), 0);
    }
}

TEST(PopulationProperties, PhaseBoundariesAdvanceAtRoughlyOnePerModulus) {
    auto p = paramsFor(256, 1, 3);
    PopulationSim sim(p, Configuration({256}));
    Count boundaries = 0;
    const Count steps = 30 * sim.modulus() * p.n / 2;
    for (Count i = 0; i < steps; ++i) {
        sim.step();
        if (sim.consumePhaseBoundary()) ++boundaries;
    }
    EXPECT_EQ(boundaries, sim.phaseIndex());
    // every interaction ticks exactly one clock, so a full cycle takes n*m interactions
    const double cycles = static_cast<double>(steps) / static_cast<double>(p.n * sim.modulus());
    EXPECT_NEAR(static_cast<double>(boundaries), cycles, 2.0);
}

TEST(RunPopulation, UnanimousStartConvergesImmediately) {
    const auto r = runPopulation(paramsFor(10, 1), Configuration({10}));
    EXPECT_TRUE(r.record.converged);
    EXPECT_EQ(r.record.winner, 0);
    EXPECT_EQ(r.record.interactions, 0);
}

TEST(RunPopulation, DeterministicPerSeed) {
    auto p = paramsFor(200, 3, 77);
    const Configuration init({100, 60, 40});
    const auto a = runPopulation(p, init, {true});
    const auto b = runPopulation(p, init, {true});
    EXPECT_EQ(a.record, b.record);
    EXPECT_EQ(a.snapshots, b.snapshots);
    p.seed = 78;
    EXPECT_NE(runPopulation(p, init).record.interactions, a.record.interactions);
}

TEST(RunPopulation, SnapshotsMatchPhaseCount) {
    const auto r = runPopulation(paramsFor(200, 3, 5), Configuration({100, 60, 40}), {true});
    ASSERT_TRUE(r.record.converged);
    EXPECT_EQ(static_cast<Count>(r.snapshots.size()), r.record.phases + 1);
    for (std::size_t i = 1; i < r.snapshots.size(); ++i) {
        EXPECT_LE(r.snapshots[i].nonzero(), r.snapshots[i - 1].nonzero());
        EXPECT_EQ(r.snapshots[i].n(), 200);
    }
}

TEST(RunPopulation, CutoffReportsNonConvergence) {
    auto p = paramsFor(64, 64, 2);
    p.maxPhases = 1;
    const auto r = runPopulation(p, makeInitial(64, 64, init::OneEach{}));
    EXPECT_FALSE(r.record.converged);
    EXPECT_FALSE(r.record.winner.has_value());
    EXPECT_EQ(r.record.interactions, 1 * clockUnit(64, 4.0) * 6 * 64);
}

TEST(RunPopulation, GoldenBiasedTwoOpinions) {
    const auto r = runPopulation(paramsFor(128, 2, 2024), Configuration({96, 32}));
    EXPECT_TRUE(r.record.converged);
    EXPECT_EQ(r.record.winner, 0);
    EXPECT_EQ(r.record.phases, 2);
    EXPECT_EQ(r.record.interactions, 50579);
}
