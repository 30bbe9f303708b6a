#pragma once

// Undecided-state dynamics in the population model: one ordered pair of
// agents interacts per step, phases are delimited by a leaderless phase clock.

#include <cmath>
#include <cstdlib>
#include <optional>
#include <stdexcept>
#include <vector>

#include "usd/core.hpp"

namespace usd {

/// a <= b in the circular order modulo m.
constexpr bool clockLeqCircular(Count a, Count b, Count m) noexcept {
    const Count gap = a > b ? a - b : b - a;
    return (a <= b) != (2 * gap > m);
}

constexpr Count clockDistCircular(Count a, Count b, Count m) noexcept {
    const Count gap = a > b ? a - b : b - a;
    return gap < m - gap ? gap : m - gap;
}

/// ceil(tau * log2 n), at least 1 so that n = 1 still has a usable clock.
inline Count clockUnit(Count n, double tau) {
    const auto unit = static_cast<Count>(std::ceil(tau * log2Safe(static_cast<double>(n))));
    return unit < 1 ? 1 : unit;
}

/// Largest pairwise circular distance among occupied clock values, given a
/// histogram over [0, m). m must be even.
inline Count maxCircularSpread(std::span<const Count> histogram) {
    const auto m = static_cast<Count>(histogram.size());
    if (m == 0 || m % 2 != 0) throw std::invalid_argument("clock histogram needs an even, positive modulus");
    // nearest[p]: circular distance from p to the closest occupied value
    std::vector<Count> nearest(static_cast<std::size_t>(m), m);
    Count last = -1;
    for (Count i = 0; i < 2 * m; ++i) {
        if (histogram[i % m] > 0) last = i;
        if (last >= 0) nearest[i % m] = std::min(nearest[i % m], i - last);
    }
    const bool any = last >= 0;
    Count next = -1;
    for (Count i = 2 * m - 1; i >= 0; --i) {
        if (histogram[i % m] > 0) next = i;
        if (next >= 0) nearest[i % m] = std::min(nearest[i % m], next - i);
    }
    if (!any) return 0;
    const Count half = m / 2;
    Count spread = 0;
    for (Count a = 0; a < m; ++a) {
        if (histogram[a] == 0) continue;
        spread = std::max(spread, half - nearest[(a + half) % m]);
    }
    return spread;
}

struct PopulationAgentState {
    std::int32_t clock = 0;  // m stays far below 2^31
    Opinion opinion = 0;
    bool decisionFlag = false;
    // While set, opinion still holds the last value but is not advertised.
    bool undecided = false;

    friend bool operator==(const PopulationAgentState&, const PopulationAgentState&) = default;
};

class PopulationSim {
public:
    PopulationSim(const ProtocolParams& params, const Configuration& init)
        : PopulationSim(params, agentsFor(params, init), init.k()) {}

    PopulationSim(const ProtocolParams& params, std::vector<PopulationAgentState> agents, std::size_t k)
        : params_(params),
          agents_(std::move(agents)),
          unit_(clockUnit(params.n, params.tau)),
          modulus_(6 * unit_),
          rng_(params.seed),
          supports_(k, 0),
          clockHistogram_(static_cast<std::size_t>(modulus_), 0) {
        params_.validate();
        if (static_cast<Count>(agents_.size()) != params_.n) throw std::invalid_argument("agent count must equal n");
        for (const auto& a : agents_) {
            if (a.clock < 0 || a.clock >= modulus_) throw std::invalid_argument("agent clock out of range");
            if (a.opinion < 0 || static_cast<std::size_t>(a.opinion) >= k) throw std::invalid_argument("agent opinion out of range");
            ++supports_[a.opinion];
            if (a.undecided) ++undecided_;
            ++clockHistogram_[a.clock];
            if (a.clock >= modulus_ / 2) ++upperHalf_;
        }
    }

    /// Decision threshold 2*ceil(tau log2 n); clocks below it are in the decision part.
    Count decisionThreshold() const noexcept { return 2 * unit_; }
    Count modulus() const noexcept { return modulus_; }
    Count unit() const noexcept { return unit_; }
    const ProtocolParams& params() const noexcept { return params_; }
    std::span<const PopulationAgentState> agents() const noexcept { return agents_; }
    Count interactions() const noexcept { return interactions_; }
    Count phaseIndex() const noexcept { return phaseIndex_; }
    Count undecidedCount() const noexcept { return undecided_; }
    double parallelTime() const noexcept { return static_cast<double>(interactions_) / static_cast<double>(params_.n); }
    std::span<const Count> clockHistogram() const noexcept { return clockHistogram_; }

    /// Opinion fields of all agents, undecided ones included.
    Configuration configuration() const { return Configuration(supports_); }

    bool unanimous() const noexcept {
        return undecided_ == 0 && supports_[agents_.front().opinion] == params_.n;
    }

    /// Only u updates its opinion and flags; exactly one of the two clocks moves.
    void interact(AgentId u, AgentId v) {
        auto& self = agents_[u];
        const auto& other = agents_[v];
        const Count threshold = decisionThreshold();

        if (self.clock < threshold && !self.decisionFlag) {
            setUndecided(self, self.opinion != other.opinion);
            self.decisionFlag = true;
        }

        if (self.clock >= threshold) {
            if (self.undecided) {
                if (!other.undecided) {
                    setUndecided(self, false);
                    --supports_[self.opinion];
                    self.opinion = other.opinion;
                    ++supports_[self.opinion];
                }
                self.decisionFlag = false;
            } else if (!params_.literalPseudocode) {
                self.decisionFlag = false;
            }
        }

        if (clockLeqCircular(self.clock, agents_[v].clock, modulus_)) {
            tick(self);
        } else {
            tick(agents_[v]);
        }
    }

    /// Draws the ordered pair (u, v) as a single uniform index over all n^2
    /// pairs, or over the n(n-1) pairs with u != v when self-interaction is off.
    void step() {
        const auto n = static_cast<std::uint64_t>(params_.n);
        AgentId u = 0, v = 0;
        if (params_.allowSelfInteraction || n == 1) {
            const auto pair = uniformBelow(rng_, n * n);
            u = static_cast<AgentId>(pair / n);
            v = static_cast<AgentId>(pair % n);
        } else {
            const auto pair = uniformBelow(rng_, n * (n - 1));
            u = static_cast<AgentId>(pair / (n - 1));
            const auto rest = static_cast<AgentId>(pair % (n - 1));
            v = rest >= u ? rest + 1 : rest;
        }
        interact(u, v);
        ++interactions_;
    }

    Count maxClockSpread() const { return maxCircularSpread(clockHistogram_); }

    /// True once per global phase boundary: the moment the last clock in the
    /// upper half [m/2, m) wraps to 0. Bookkeeping only.
    bool consumePhaseBoundary() noexcept {
        const bool crossed = boundaryPending_;
        boundaryPending_ = false;
        return crossed;
    }

private:
    static std::vector<PopulationAgentState> agentsFor(const ProtocolParams& params, const Configuration& init) {
        if (init.n() != params.n) throw std::invalid_argument("initial configuration must sum to n");
        std::vector<PopulationAgentState> agents;
        agents.reserve(static_cast<std::size_t>(init.n()));
        for (std::size_t i = 0; i < init.k(); ++i) {
            for (Count c = 0; c < init[i]; ++c) agents.push_back({0, static_cast<Opinion>(i), false, false});
        }
        return agents;
    }

    void setUndecided(PopulationAgentState& a, bool value) noexcept {
        if (a.undecided != value) undecided_ += value ? 1 : -1;
        a.undecided = value;
    }

    void tick(PopulationAgentState& a) noexcept {
        const Count half = modulus_ / 2;
        --clockHistogram_[a.clock];
        a.clock = a.clock + 1 == modulus_ ? 0 : a.clock + 1;
        ++clockHistogram_[a.clock];
        if (a.clock == half) {
            ++upperHalf_;
        } else if (a.clock == 0) {
            if (--upperHalf_ == 0) {
                ++phaseIndex_;
                boundaryPending_ = true;
            }
        }
    }

    ProtocolParams params_;
    std::vector<PopulationAgentState> agents_;
    Count unit_;
    Count modulus_;
    Rng rng_;
    std::vector<Count> supports_;
    std::vector<Count> clockHistogram_;
    Count undecided_ = 0;
    Count upperHalf_ = 0;
    Count interactions_ = 0;
    Count phaseIndex_ = 0;
    bool boundaryPending_ = false;
};

inline RunResult runPopulation(const ProtocolParams& params, const Configuration& init, const RunOptions& options = {}) {
    params.validate();
    if (init.n() != params.n || static_cast<Count>(init.k()) != params.k) {
        throw std::invalid_argument("initial configuration must match n and k");
    }
    PopulationSim sim(params, init);
    RunResult result{TrialRecord{}, init, {}};
    recordInitial(result.record, init);
    if (options.recordSnapshots) result.snapshots.push_back(init);

    const Count cutoff = params.maxPhases * sim.modulus() * params.n;
    while (!sim.unanimous() && sim.interactions() < cutoff) {
        sim.step();
        if (sim.consumePhaseBoundary() && options.recordSnapshots) result.snapshots.push_back(sim.configuration());
    }

    auto& rec = result.record;
    rec.interactions = sim.interactions();
    rec.parallelTime = sim.parallelTime();
    rec.phases = sim.phaseIndex();
    result.final = sim.configuration();
    if (sim.unanimous()) recordWinner(rec, init, params.xiEff, sim.agents().front().opinion);
    return result;
}

}  // namespace usd
