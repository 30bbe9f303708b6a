#pragma once

// Gossip-model undecided-state dynamics that needs neither n nor k. Agents
// derive a shared estimate T of log n (init -> count -> sync) and then run
// the gossip protocol with phases of length 1000 T.

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "usd/core.hpp"

namespace usd {

enum class Stage : std::uint8_t { init, count, sync, run };

inline const char* stageName(Stage s) noexcept {
    switch (s) {
        case Stage::init: return "init";
        case Stage::count: return "count";
        case Stage::sync: return "sync";
        case Stage::run: return "run";
    }
    return "?";
}

struct UniformAgentState {
    Stage stage = Stage::init;
    Count T = 0;
    Count round = 0;
    Opinion opinion = 0;
    Opinion initialOpinion = 0;
    bool bit = false;
    bool hit = false;
    bool undecided = false;

    friend bool operator==(const UniformAgentState&, const UniformAgentState&) = default;
};

/// Phase length 1000 T, clamped to 1 so agents that finished counting with
/// T = 0 still have a valid modulus.
constexpr Count phaseLength(Count T) noexcept { return T > 0 ? 1000 * T : 1; }

namespace detail {

inline void syncStage(UniformAgentState& next, const UniformAgentState& v) {
    if (next.T < v.T) {
        next.T = v.T;
        next.round = v.round;
        next.opinion = next.initialOpinion;
    }
    ++next.round;
    if (next.round >= phaseLength(next.T)) {
        next.round = 0;
        next.stage = Stage::run;
    }
}

}  // namespace detail

/// New state of u after reading partner v; both arguments are round-start values.
inline UniformAgentState uniformUpdate(const UniformAgentState& u, const UniformAgentState& v) {
    UniformAgentState next = u;
    switch (u.stage) {
        case Stage::init:
            if (u.round % 2 == 0) {
                next.hit = u.initialOpinion == v.initialOpinion;
            } else if (u.hit && u.opinion != v.opinion) {
                next.stage = Stage::count;
            }
            // contagion last, so its bit assignment wins
            if (v.stage != Stage::init) {
                next.stage = Stage::count;
                next.bit = !v.bit;
            }
            ++next.round;
            break;
        case Stage::count:
            if (v.stage != Stage::init) {
                if (u.bit == v.bit) ++next.T;
                else next.stage = Stage::sync;
            }
            ++next.round;
            break;
        case Stage::sync:
            detail::syncStage(next, v);
            break;
        case Stage::run:
            if (u.T < v.T) {
                next.stage = Stage::sync;
                detail::syncStage(next, v);
            } else if (u.T == v.T) {
                if (u.round == 0) {
                    next.undecided = u.opinion != v.opinion;
                } else if (u.undecided && !v.undecided) {
                    next.undecided = false;
                    next.opinion = v.opinion;
                }
                next.round = (u.round + 1) % phaseLength(u.T);
            }
            break;
    }
    return next;
}

class UniformSim {
public:
    UniformSim(const ProtocolParams& params, const Configuration& init)
        : UniformSim(params, agentsFor(params, init), init.k()) {}

    UniformSim(const ProtocolParams& params, std::vector<UniformAgentState> agents, std::size_t k)
        : params_(params), agents_(std::move(agents)), k_(k), rng_(params.seed) {
        params_.validate();
        if (static_cast<Count>(agents_.size()) != params_.n) throw std::invalid_argument("agent count must equal n");
        for (const auto& a : agents_) {
            if (a.opinion < 0 || static_cast<std::size_t>(a.opinion) >= k_ || a.initialOpinion < 0 ||
                static_cast<std::size_t>(a.initialOpinion) >= k_) {
                throw std::invalid_argument("agent opinion out of range");
            }
        }
        partners_.resize(agents_.size());
    }

    std::span<const UniformAgentState> agents() const noexcept { return agents_; }
    Count roundCount() const noexcept { return roundCount_; }

    Configuration configuration() const {
        std::vector<Count> counts(k_, 0);
        for (const auto& a : agents_) ++counts[a.opinion];
        return Configuration(std::move(counts));
    }

    Count maxT() const noexcept {
        Count t = 0;
        for (const auto& a : agents_) t = std::max(t, a.T);
        return t;
    }

    bool allT(Count t) const noexcept {
        return std::all_of(agents_.begin(), agents_.end(), [t](const auto& a) { return a.T == t; });
    }

    bool anyIn(Stage s) const noexcept {
        return std::any_of(agents_.begin(), agents_.end(), [s](const auto& a) { return a.stage == s; });
    }

    /// Every agent in run with the same T and round 0: a phase boundary.
    bool synchronizedBoundary() const noexcept {
        const Count t = agents_.front().T;
        return std::all_of(agents_.begin(), agents_.end(),
                           [t](const auto& a) { return a.stage == Stage::run && a.T == t && a.round == 0; });
    }

    bool unanimous() const noexcept {
        const Opinion first = agents_.front().opinion;
        return std::all_of(agents_.begin(), agents_.end(),
                           [first](const auto& a) { return !a.undecided && a.opinion == first; });
    }

    /// Partners drawn in id order, self allowed unless disabled.
    void uniformRound() {
        const auto n = static_cast<std::uint64_t>(params_.n);
        for (std::size_t u = 0; u < agents_.size(); ++u) {
            auto v = static_cast<AgentId>(uniformBelow(rng_, n));
            if (!params_.allowSelfInteraction && n > 1) {
                while (v == u) v = static_cast<AgentId>(uniformBelow(rng_, n));
            }
            partners_[u] = v;
        }
        applyRound(partners_);
    }

    void applyRound(std::span<const AgentId> partners) {
        if (partners.size() != agents_.size()) throw std::invalid_argument("need one partner per agent");
        snapshot_ = agents_;
        for (std::size_t u = 0; u < agents_.size(); ++u) agents_[u] = uniformUpdate(snapshot_[u], snapshot_[partners[u]]);
        ++roundCount_;
    }

    /// Skips rounds whose outcome is forced regardless of partner draws:
    /// (a) all agents running with one T and one round > 0, nobody undecided,
    /// up to the next boundary; (b) all agents in sync with one T and one
    /// round, up to the round before the stage exit.
    Count skipIdleRounds() {
        const auto& first = agents_.front();
        const bool uniformState = std::all_of(agents_.begin(), agents_.end(), [&](const auto& a) {
            return a.stage == first.stage && a.T == first.T && a.round == first.round;
        });
        if (!uniformState) return 0;
        const Count length = phaseLength(first.T);
        Count skip = 0;
        if (first.stage == Stage::run && first.round > 0 &&
            std::none_of(agents_.begin(), agents_.end(), [](const auto& a) { return a.undecided; })) {
            skip = length - first.round;
            for (auto& a : agents_) a.round = 0;
        } else if (first.stage == Stage::sync && length - first.round > 1) {
            skip = length - first.round - 1;
            for (auto& a : agents_) a.round += skip;
        }
        roundCount_ += skip;
        return skip;
    }

private:
    static std::vector<UniformAgentState> agentsFor(const ProtocolParams& params, const Configuration& init) {
        if (init.n() != params.n) throw std::invalid_argument("initial configuration must sum to n");
        std::vector<UniformAgentState> agents;
        agents.reserve(static_cast<std::size_t>(init.n()));
        for (std::size_t i = 0; i < init.k(); ++i) {
            UniformAgentState a;
            a.opinion = a.initialOpinion = static_cast<Opinion>(i);
            agents.insert(agents.end(), static_cast<std::size_t>(init[i]), a);
        }
        return agents;
    }

    ProtocolParams params_;
    std::vector<UniformAgentState> agents_;
    std::vector<UniformAgentState> snapshot_;
    std::vector<AgentId> partners_;
    std::size_t k_;
    Count roundCount_ = 0;
    Rng rng_;
};

/// Runs until consensus at a run-stage phase boundary. A single initial
/// opinion converges trivially without simulating (no agent could ever
/// leave the init stage).
inline RunResult runUniform(const ProtocolParams& params, const Configuration& init, const RunOptions& options = {}) {
    params.validate();
    if (init.n() != params.n || static_cast<Count>(init.k()) != params.k) {
        throw std::invalid_argument("initial configuration must match n and k");
    }
    RunResult result{TrialRecord{}, init, {}};
    auto& rec = result.record;
    recordInitial(rec, init);
    rec.uniform = UniformDiagnostics{};
    auto& diag = *rec.uniform;
    if (options.recordSnapshots) result.snapshots.push_back(init);

    if (init.nonzero() == 1) {
        recordWinner(rec, init, params.xiEff, init.argmax());
        return result;
    }

    UniformSim sim(params, init);
    auto observe = [&] {
        if (!diag.rhoRound && !sim.anyIn(Stage::init) && !sim.anyIn(Stage::count)) diag.rhoRound = sim.roundCount();
        if (diag.rhoRound && !diag.tAdoptionRound && sim.allT(sim.maxT())) diag.tAdoptionRound = sim.roundCount();
    };

    Count boundaries = 0;
    bool converged = false;
    observe();
    while (true) {
        if (sim.synchronizedBoundary()) {
            ++boundaries;
            if (options.recordSnapshots) result.snapshots.push_back(sim.configuration());
            if (sim.unanimous()) {
                converged = true;
                break;
            }
        }
        if (sim.roundCount() >= params.maxPhases * phaseLength(sim.maxT())) break;
        sim.uniformRound();
        observe();
        sim.skipIdleRounds();
    }

    diag.tFinal = sim.maxT();
    rec.rounds = sim.roundCount();
    rec.interactions = rec.rounds * params.n;
    rec.parallelTime = static_cast<double>(rec.interactions) / static_cast<double>(params.n);
    rec.phases = boundaries > 0 ? boundaries - 1 : 0;
    result.final = sim.configuration();
    if (converged) recordWinner(rec, init, params.xiEff, sim.agents().front().opinion);
    return result;
}

}  // namespace usd
