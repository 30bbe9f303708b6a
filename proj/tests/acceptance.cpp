// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria (capped at 1 for ctest).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "usd/usd.hpp"

using namespace usd;

namespace {

struct Verdict {
    bool passed = false;
    std::string detail;
};

unsigned workerCount() { return std::max(1u, std::thread::hardware_concurrency()); }

ExperimentSpec spec(Protocol protocol, Count n, Count k, InitMode init, Count trials, std::uint64_t seedBase) {
    ExperimentSpec s;
    s.protocol = protocol;
    s.params.n = n;
    s.params.k = k;
    s.init = std::move(init);
    s.trials = trials;
    s.seedBase = seedBase;
    s.workers = workerCount();
    return s;
}

Count log2Exact(Count n) { return static_cast<Count>(std::llround(std::log2(static_cast<double>(n)))); }

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::string fmt(double v, int precision = 4) {
    std::ostringstream out;
    out.precision(precision);
    out << v;
    return out.str();
}

// A1: gossip, one opinion per agent
Verdict gossipScaling() {
    std::vector<double> medians;
    bool ok = true;
    std::string detail;
    for (Count n : {Count{1} << 10, Count{1} << 12, Count{1} << 14}) {
        auto s = spec(Protocol::gossip, n, n, init::OneEach{}, 50, 1000);
        s.params.tbcConst = 4;
        s.params.maxPhases = 40 * log2Exact(n);
        const auto r = runExperiment(s);
        const double med = r.summary.medianPhases.value_or(std::numeric_limits<double>::infinity());
        medians.push_back(med);
        ok = ok && r.summary.convergenceRate >= 0.95;
        detail += "n=" + std::to_string(n) + " conv=" + fmt(r.summary.convergenceRate) + " median=" + fmt(med) + "; ";
    }
    const double ratio = medians.back() / medians.front();
    ok = ok && ratio < 4.0;
    return {ok, detail + "ratio=" + fmt(ratio) + " (need conv>=0.95, ratio<4)"};
}

// A2: population, one opinion per agent
Verdict populationScaling() {
    std::vector<double> medians;
    bool ok = true;
    std::string detail;
    for (Count n : {Count{1} << 9, Count{1} << 11, Count{1} << 13}) {
        auto s = spec(Protocol::population, n, n, init::OneEach{}, 30, 2000);
        s.params.tau = 4;
        s.params.maxPhases = 200;
        const auto r = runExperiment(s);
        std::vector<double> times;
        for (const auto& row : r.rows) {
            if (row.record.converged) times.push_back(row.record.parallelTime);
        }
        const double med = times.empty() ? std::numeric_limits<double>::infinity() : median(times);
        medians.push_back(med);
        ok = ok && r.summary.convergenceRate >= 0.90;
        detail += "n=" + std::to_string(n) + " conv=" + fmt(r.summary.convergenceRate) + " median_time=" + fmt(med, 6) + "; ";
    }
    const bool monotone = medians[0] <= medians[1] && medians[1] <= medians[2];
    const double ratio = medians.back() / medians.front();
    ok = ok && monotone && ratio < 4.0;
    return {ok, detail + "monotone=" + (monotone ? "yes" : "no") + " ratio=" + fmt(ratio) +
                    " (need conv>=0.90, monotone, ratio<4)"};
}

// A3: biased start, initial majority should win
Verdict pluralityWins() {
    const Count n = 10000;
    const auto delta = static_cast<Count>(std::ceil(3.0 * std::sqrt(n * std::log(static_cast<double>(n)))));
    const auto r = runExperiment(spec(Protocol::gossip, n, 2, init::Biased{delta}, 100, 3000));
    return {r.summary.pluralityWinRate >= 0.95,
            "delta=" + std::to_string(delta) + " plurality_win_rate=" + fmt(r.summary.pluralityWinRate) + " (need >=0.95)"};
}

// A4: balanced k=16, winner must be initially significant
Verdict winnerSignificance() {
    auto s = spec(Protocol::gossip, 10000, 16, init::Balanced{}, 100, 4000);
    s.params.xiEff = 3;
    const auto r = runExperiment(s);
    const double rate = r.summary.winnerSignificantRate.value_or(0.0);
    return {r.summary.converged > 0 && rate == 1.0,
            "converged=" + std::to_string(r.summary.converged) + "/100 significant_rate=" + fmt(rate) + " (need 1)"};
}

Verdict fixtureVerdict(const std::vector<ValidationFixture>& fixtures) {
    const auto report = validateDistributions(fixtures);
    std::string detail;
    for (const auto& o : report.outcomes) {
        detail += o.fixture + "[" + std::to_string(o.opinion) + "] tv=" + fmt(o.tv) + " p=" + fmt(o.pValue) + "; ";
    }
    return {report.passed(), detail};
}

// A5: simulator decision round against Bin(x_i, x_i / n)
Verdict decisionOracle() {
    auto v = fixtureVerdict({{"decision", FixtureKind::simulatorDecision, {400, 300, 200, 100}, 1000, 10000, 0.02, 1e-3, 5000}});
    v.detail += "(need tv<0.02, p>=1e-3)";
    return v;
}

// A6: boosting urn and a full gossip phase against the oracle
Verdict boostingOracle() {
    auto v = fixtureVerdict({
        {"urn", FixtureKind::boosting, {3, 2}, 10, 100000, 0.02, 0.0, 6000},
        {"gossip-phase", FixtureKind::gossipPhase, {6, 4}, 10, 100000, 0.05, 0.0, 6001},
    });
    v.detail += "(need urn tv<0.02, phase tv<0.05)";
    return v;
}

// A7: clock spread stays below one unit, checked every n interactions
Verdict clockSeparation() {
    const Count n = Count{1} << 12;
    const Count phases = 50 * log2Exact(n);
    Count worst = 0;
    Count limit = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        ProtocolParams p;
        p.n = n;
        p.k = n;
        p.tau = 4;
        p.seed = 7000 + seed;
        PopulationSim sim(p, makeInitial(n, n, init::OneEach{}));
        limit = sim.unit();
        while (sim.phaseIndex() < phases) {
            for (Count i = 0; i < n; ++i) sim.step();
            worst = std::max(worst, sim.maxClockSpread());
        }
    }
    return {worst < limit, "max_spread=" + std::to_string(worst) + " (need <" + std::to_string(limit) + ")"};
}

// A8: uniform protocol settles on one T in the band and reaches consensus
Verdict uniformProtocol() {
    bool ok = true;
    std::string detail;
    for (Count n : {Count{1} << 10, Count{1} << 12}) {
        const auto r = runExperiment(spec(Protocol::uniform, n, n, init::OneEach{}, 50, 8000));
        const double ln = std::log(static_cast<double>(n));
        Count good = 0;
        Count minT = std::numeric_limits<Count>::max(), maxT = 0;
        for (const auto& row : r.rows) {
            const auto& d = *row.record.uniform;
            minT = std::min(minT, d.tFinal);
            maxT = std::max(maxT, d.tFinal);
            const double t = static_cast<double>(d.tFinal);
            if (row.record.converged && d.tAdoptionRound && t >= 0.05 * ln && t <= 100 * ln) ++good;
        }
        const double rate = static_cast<double>(good) / static_cast<double>(r.rows.size());
        ok = ok && rate >= 0.90;
        detail += "n=" + std::to_string(n) + " rate=" + fmt(rate) + " T=[" + std::to_string(minT) + "," + std::to_string(maxT) +
                  "]; ";
    }
    return {ok, detail + "(need >=0.90)"};
}

// A9: ideal phases from all ones freeze at rate (1 - 1/n)^n
Verdict frozenPhase() {
    const Count n = 100;
    const Configuration x(std::vector<Count>(n, 1));
    Rng rng(9000);
    Count frozen = 0;
    const Count phases = 10000;
    for (Count i = 0; i < phases; ++i) frozen += idealPhase(x, rng).frozen ? 1 : 0;
    const double freq = static_cast<double>(frozen) / static_cast<double>(phases);
    const double expected = std::pow(1.0 - 1.0 / static_cast<double>(n), static_cast<double>(n));
    return {std::abs(freq - expected) <= 0.03,
            "freq=" + fmt(freq) + " expected=" + fmt(expected, 5) + " (need within 0.03)"};
}

// A10: identical specs give byte-identical output
Verdict determinism() {
    bool ok = true;
    std::string detail;
    for (auto protocol : {Protocol::population, Protocol::gossip, Protocol::uniform, Protocol::ideal}) {
        auto s = spec(protocol, 256, 4, init::Balanced{}, 5, 10000);
        std::ostringstream a, b;
        writeResults(a, runExperiment(s), OutputFormat::jsonl);
        s.workers = 1;
        writeResults(b, runExperiment(s), OutputFormat::jsonl);
        const bool same = a.str() == b.str() && !a.str().empty();
        ok = ok && same;
        detail += std::string(protocolName(protocol)) + (same ? "=identical " : "=DIFFERENT ");
    }
    return {ok, detail};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"A1 gossip scaling", gossipScaling},
        {"A2 population scaling", populationScaling},
        {"A3 plurality wins under bias", pluralityWins},
        {"A4 winner significance", winnerSignificance},
        {"A5 decision round vs binomial", decisionOracle},
        {"A6 boosting vs urn oracle", boostingOracle},
        {"A7 phase clock separation", clockSeparation},
        {"A8 uniform protocol T agreement", uniformProtocol},
        {"A9 frozen phase frequency", frozenPhase},
        {"A10 determinism", determinism},
    };
    int failed = 0;
    for (const auto& [name, check] : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = check();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::cout << (v.passed ? "PASS " : "FAIL ") << name << ": " << v.detail << " [" << fmt(secs, 3) << "s]" << std::endl;
        failed += v.passed ? 0 : 1;
    }
    std::cout << (10 - failed) << "/10 criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
