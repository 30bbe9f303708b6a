#pragma once

// Undecided-state dynamics in the gossip model. Rounds are synchronous and
// global: round 0 of every phase is the decision part, rounds 1..T_BC the
// boosting part.

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "usd/core.hpp"
#include "usd/population.hpp"

namespace usd {

/// Broadcast budget T_BC. With k known: ceil(c * (log2 k + log2 log2 n)),
/// otherwise ceil(c * log2 n). Never below 1.
inline Count broadcastRounds(const ProtocolParams& params) {
    if (params.tbcRounds) return *params.tbcRounds;
    const double log2n = log2Safe(static_cast<double>(params.n));
    const double budget = params.kKnown
                              ? params.tbcConst * (log2Safe(static_cast<double>(params.k)) + log2Safe(log2n))
                              : params.tbcConst * log2n;
    const auto rounds = static_cast<Count>(std::ceil(budget));
    return rounds < 1 ? 1 : rounds;
}

// The round counter is identical for all agents, so it lives in the sim.
struct GossipAgentState {
    Opinion opinion = 0;
    bool undecided = false;

    friend bool operator==(const GossipAgentState&, const GossipAgentState&) = default;
};

class GossipSim {
public:
    GossipSim(const ProtocolParams& params, const Configuration& init)
        : GossipSim(params, agentsFor(params, init), init.k(), 0) {}

    GossipSim(const ProtocolParams& params, std::vector<GossipAgentState> agents, std::size_t k, Count round)
        : params_(params), agents_(std::move(agents)), k_(k), tbc_(broadcastRounds(params)), round_(round), rng_(params.seed) {
        params_.validate();
        if (static_cast<Count>(agents_.size()) != params_.n) throw std::invalid_argument("agent count must equal n");
        if (round_ < 0 || round_ > tbc_) throw std::invalid_argument("round out of range");
        for (const auto& a : agents_) {
            if (a.opinion < 0 || static_cast<std::size_t>(a.opinion) >= k_) throw std::invalid_argument("agent opinion out of range");
        }
        partners_.resize(agents_.size());
    }

    Count tbc() const noexcept { return tbc_; }
    Count round() const noexcept { return round_; }
    Count roundCount() const noexcept { return roundCount_; }
    std::span<const GossipAgentState> agents() const noexcept { return agents_; }
    const ProtocolParams& params() const noexcept { return params_; }

    Configuration configuration() const {
        std::vector<Count> counts(k_, 0);
        for (const auto& a : agents_) ++counts[a.opinion];
        return Configuration(std::move(counts));
    }

    /// Supports counted over decided agents only; may sum to zero.
    std::vector<Count> decidedCounts() const {
        std::vector<Count> counts(k_, 0);
        for (const auto& a : agents_) {
            if (!a.undecided) ++counts[a.opinion];
        }
        return counts;
    }

    Count undecidedCount() const noexcept {
        Count c = 0;
        for (const auto& a : agents_) c += a.undecided ? 1 : 0;
        return c;
    }

    bool unanimous() const noexcept {
        const Opinion first = agents_.front().opinion;
        for (const auto& a : agents_) {
            if (a.undecided || a.opinion != first) return false;
        }
        return true;
    }

    /// One round: every agent draws a partner in id order, then all agents
    /// update from the round-start state.
    void gossipRound() {
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

    /// Round update for a given partner vector; pure in (state, partners).
    void applyRound(std::span<const AgentId> partners) {
        if (partners.size() != agents_.size()) throw std::invalid_argument("need one partner per agent");
        snapshot_ = agents_;
        if (round_ == 0) {
            for (std::size_t u = 0; u < agents_.size(); ++u) {
                agents_[u].undecided = snapshot_[u].opinion != snapshot_[partners[u]].opinion;
            }
        } else {
            for (std::size_t u = 0; u < agents_.size(); ++u) {
                const auto& v = snapshot_[partners[u]];
                if (snapshot_[u].undecided && !v.undecided) {
                    agents_[u].undecided = false;
                    agents_[u].opinion = v.opinion;
                }
            }
        }
        round_ = round_ == tbc_ ? 0 : round_ + 1;
        ++roundCount_;
    }

    /// In the boosting part with nobody undecided the remaining rounds of the
    /// phase cannot change any state; jump to the next phase boundary without
    /// drawing. Returns the number of rounds skipped.
    Count skipIdleRounds() {
        if (round_ == 0 || undecidedCount() > 0) return 0;
        const Count skipped = tbc_ + 1 - round_;
        round_ = 0;
        roundCount_ += skipped;
        return skipped;
    }

    /// Runs rounds (with idle skipping) until the next phase boundary.
    void finishPhase() {
        do {
            gossipRound();
            skipIdleRounds();
        } while (round_ != 0);
    }

private:
    static std::vector<GossipAgentState> agentsFor(const ProtocolParams& params, const Configuration& init) {
        if (init.n() != params.n) throw std::invalid_argument("initial configuration must sum to n");
        std::vector<GossipAgentState> agents;
        agents.reserve(static_cast<std::size_t>(init.n()));
        for (std::size_t i = 0; i < init.k(); ++i) {
            for (Count c = 0; c < init[i]; ++c) agents.push_back({static_cast<Opinion>(i), false});
        }
        return agents;
    }

    ProtocolParams params_;
    std::vector<GossipAgentState> agents_;
    std::vector<GossipAgentState> snapshot_;
    std::vector<AgentId> partners_;
    std::size_t k_;
    Count tbc_;
    Count round_;
    Count roundCount_ = 0;
    Rng rng_;
};

inline RunResult runGossip(const ProtocolParams& params, const Configuration& init, const RunOptions& options = {}) {
    params.validate();
    if (init.n() != params.n || static_cast<Count>(init.k()) != params.k) {
        throw std::invalid_argument("initial configuration must match n and k");
    }
    GossipSim sim(params, init);
    RunResult result{TrialRecord{}, init, {}};
    recordInitial(result.record, init);
    if (options.recordSnapshots) result.snapshots.push_back(init);

    const Count cutoff = params.maxPhases * (sim.tbc() + 1);
    Count phases = 0;
    while (!sim.unanimous() && sim.roundCount() < cutoff) {
        sim.finishPhase();
        ++phases;
        if (options.recordSnapshots) result.snapshots.push_back(sim.configuration());
    }

    auto& rec = result.record;
    rec.rounds = sim.roundCount();
    rec.interactions = rec.rounds * params.n;
    rec.parallelTime = static_cast<double>(rec.interactions) / static_cast<double>(params.n);
    rec.phases = phases;
    result.final = sim.configuration();
    if (sim.unanimous()) recordWinner(rec, init, params.xiEff, sim.agents().front().opinion);
    return result;
}

}  // namespace usd
