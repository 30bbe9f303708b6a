#pragma once

// Shared vocabulary for the undecided-state-dynamics simulators: opinion
// configurations, bias measures, significance, initial configurations and
// the seeded RNG plumbing every trial draws from.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

namespace usd {

using Count = std::int64_t;
using Opinion = std::int32_t;
using AgentId = std::uint32_t;

/// One generator per trial. Every simulator documents the order in which it
/// consumes draws so that a (params, init, seed) triple replays exactly.
using Rng = std::mt19937_64;

/// Uniform integer in [0, bound). Lemire's multiply-shift with rejection, so
/// results depend only on the mt19937_64 output stream (which the standard
/// pins down) and not on the library's distribution implementation.
inline std::uint64_t uniformBelow(Rng& rng, std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("uniformBelow: bound must be positive");
    unsigned __int128 product = static_cast<unsigned __int128>(rng()) * bound;
    auto low = static_cast<std::uint64_t>(product);
    if (low < bound) {
        const std::uint64_t threshold = (0 - bound) % bound;
        while (low < threshold) {
            product = static_cast<unsigned __int128>(rng()) * bound;
            low = static_cast<std::uint64_t>(product);
        }
    }
    return static_cast<std::uint64_t>(product >> 64);
}

inline double log2Safe(double x) { return x > 0 ? std::log2(x) : 0.0; }

/// Support counts of k opinions over n agents.
class Configuration {
public:
    explicit Configuration(std::vector<Count> counts) : counts_(std::move(counts)) {
        if (counts_.empty()) throw std::invalid_argument("configuration needs at least one opinion");
        for (Count c : counts_) {
            if (c < 0) throw std::invalid_argument("configuration counts must be non-negative");
        }
        n_ = std::accumulate(counts_.begin(), counts_.end(), Count{0});
        if (n_ < 1) throw std::invalid_argument("configuration must contain at least one agent");
    }

    std::span<const Count> counts() const noexcept { return counts_; }
    Count operator[](std::size_t i) const { return counts_.at(i); }
    Count n() const noexcept { return n_; }
    std::size_t k() const noexcept { return counts_.size(); }

    /// Opinion ids sorted by decreasing support; ties go to the lower id.
    std::vector<Opinion> order() const {
        std::vector<Opinion> ids(counts_.size());
        std::iota(ids.begin(), ids.end(), Opinion{0});
        std::stable_sort(ids.begin(), ids.end(),
                         [&](Opinion a, Opinion b) { return counts_[a] > counts_[b]; });
        return ids;
    }

    Opinion argmax() const {
        return static_cast<Opinion>(std::max_element(counts_.begin(), counts_.end()) - counts_.begin());
    }
    Count max() const { return counts_[argmax()]; }

    /// i-th largest support, 1-based; 0 past the end.
    Count orderStatistic(std::size_t i) const {
        if (i == 0) throw std::invalid_argument("order statistics are 1-based");
        if (i > counts_.size()) return 0;
        std::vector<Count> sorted(counts_);
        std::sort(sorted.begin(), sorted.end(), std::greater<>());
        return sorted[i - 1];
    }

    std::size_t nonzero() const {
        return static_cast<std::size_t>(std::count_if(counts_.begin(), counts_.end(), [](Count c) { return c > 0; }));
    }
    bool unanimous() const { return max() == n_; }

    friend bool operator==(const Configuration&, const Configuration&) = default;

private:
    std::vector<Count> counts_;
    Count n_ = 0;
};

struct ProtocolParams {
    Count n = 0;
    Count k = 0;
    double tau = 4.0;
    double tbcConst = 4.0;
    double xiEff = 3.0;
    bool allowSelfInteraction = true;
    // Reset the decision flag only inside the undecided boosting branch, as
    // the pseudocode is written. Off by default: every boosting-part
    // interaction clears it.
    bool literalPseudocode = false;
    // Gossip: when false the broadcast budget is sized from n alone.
    bool kKnown = true;
    // Gossip: fixed broadcast budget, bypassing tbcConst.
    std::optional<Count> tbcRounds;
    Count maxPhases = 200;
    std::uint64_t seed = 0;

    void validate() const {
        if (n < 1) throw std::invalid_argument("n must be >= 1");
        if (k < 1 || k > n) throw std::invalid_argument("k must satisfy 1 <= k <= n");
        if (!(tau > 0)) throw std::invalid_argument("tau must be positive");
        if (!(tbcConst > 0)) throw std::invalid_argument("tbc constant must be positive");
        if (!(xiEff >= 0)) throw std::invalid_argument("xi must be non-negative");
        if (maxPhases < 1) throw std::invalid_argument("max phases must be >= 1");
        if (tbcRounds && *tbcRounds < 1) throw std::invalid_argument("tbc rounds must be >= 1");
    }
};

/// Extra bookkeeping reported by the uniform protocol.
struct UniformDiagnostics {
    Count tFinal = 0;
    std::optional<Count> rhoRound;        // first round with nobody in init or count
    std::optional<Count> tAdoptionRound;  // first round after rho where all T agree

    friend bool operator==(const UniformDiagnostics&, const UniformDiagnostics&) = default;
};

struct TrialRecord {
    bool converged = false;
    std::optional<Opinion> winner;
    Count phases = 0;
    Count interactions = 0;
    Count rounds = 0;
    double parallelTime = 0.0;
    bool winnerSignificantInitially = false;
    Count initialAdditiveBias = 0;
    double initialMultiplicativeBias = 0.0;  // +inf when the runner-up has no support
    std::optional<UniformDiagnostics> uniform;

    friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

struct RunOptions {
    bool recordSnapshots = false;
};

struct RunResult {
    TrialRecord record;
    Configuration final;
    std::vector<Configuration> snapshots;  // one per phase boundary, starting with the initial configuration
};

inline Count additiveBias(const Configuration& config) {
    return config.orderStatistic(1) - config.orderStatistic(2);
}

inline double multiplicativeBias(const Configuration& config) {
    const Count second = config.orderStatistic(2);
    if (second == 0) return std::numeric_limits<double>::infinity();
    return static_cast<double>(config.orderStatistic(1)) / static_cast<double>(second);
}

/// Opinions whose support is within xi * sqrt(n ln n) of the maximum.
inline std::vector<Opinion> significantSet(const Configuration& config, double xiEff) {
    if (config.n() < 2) throw std::invalid_argument("significance needs n >= 2");
    if (!(xiEff >= 0)) throw std::invalid_argument("xi must be non-negative");
    const double n = static_cast<double>(config.n());
    const double threshold = static_cast<double>(config.max()) - xiEff * std::sqrt(n * std::log(n));
    std::vector<Opinion> out;
    for (std::size_t i = 0; i < config.k(); ++i) {
        if (static_cast<double>(config[i]) >= threshold) out.push_back(static_cast<Opinion>(i));
    }
    return out;
}

inline bool isSignificant(const Configuration& config, double xiEff, Opinion opinion) {
    if (config.n() < 2) return opinion == config.argmax();
    const auto set = significantSet(config, xiEff);
    return std::find(set.begin(), set.end(), opinion) != set.end();
}

/// Expected number of decided agents after a decision part: sum x_i^2 / n.
inline double psi(const Configuration& config) {
    double sum = 0.0;
    for (Count c : config.counts()) sum += static_cast<double>(c) * static_cast<double>(c);
    return sum / static_cast<double>(config.n());
}

namespace init {
struct Balanced {};
struct Biased {
    Count delta = 0;
};
struct OneEach {};
struct Explicit {
    std::vector<Count> counts;
};
}  // namespace init

using InitMode = std::variant<init::Balanced, init::Biased, init::OneEach, init::Explicit>;

inline std::vector<Count> balancedCounts(Count n, Count k) {
    std::vector<Count> counts(static_cast<std::size_t>(k), n / k);
    for (Count i = 0; i < n % k; ++i) ++counts[static_cast<std::size_t>(i)];
    return counts;
}

/// Biased mode starts balanced and moves the fewest agents from opinion 1 to
/// opinion 0 that lift the additive bias to at least delta.
inline Configuration makeInitial(Count n, Count k, const InitMode& mode) {
    if (n < 1 || k < 1 || k > n) throw std::invalid_argument("initial configuration needs 1 <= k <= n");
    struct Visitor {
        Count n, k;
        Configuration operator()(const init::Balanced&) const { return Configuration(balancedCounts(n, k)); }
        Configuration operator()(const init::Biased& b) const {
            if (b.delta < 0) throw std::invalid_argument("bias must be non-negative");
            auto counts = balancedCounts(n, k);
            if (k == 1) {
                if (counts[0] < b.delta) throw std::invalid_argument("bias exceeds population");
                return Configuration(std::move(counts));
            }
            const Count rival = k >= 3 ? counts[2] : 0;
            // bias after moving c agents: (counts0 + c) - max(counts1 - c, rival)
            auto biasAfter = [&](Count c) { return counts[0] + c - std::max(counts[1] - c, rival); };
            // bias is non-decreasing in c; binary search the smallest c
            Count lo = 0, hi = counts[1];
            if (biasAfter(hi) < b.delta) throw std::invalid_argument("bias would make a count negative");
            while (lo < hi) {
                const Count mid = lo + (hi - lo) / 2;
                if (biasAfter(mid) >= b.delta) hi = mid;
                else lo = mid + 1;
            }
            counts[0] += lo;
            counts[1] -= lo;
            return Configuration(std::move(counts));
        }
        Configuration operator()(const init::OneEach&) const {
            if (k != n) throw std::invalid_argument("one-each requires k == n");
            return Configuration(std::vector<Count>(static_cast<std::size_t>(n), 1));
        }
        Configuration operator()(const init::Explicit& e) const {
            if (static_cast<Count>(e.counts.size()) != k) throw std::invalid_argument("explicit counts must have k entries");
            Configuration c(e.counts);
            if (c.n() != n) throw std::invalid_argument("explicit counts must sum to n");
            return c;
        }
    };
    return std::visit(Visitor{n, k}, mode);
}

/// Parses a JSON array of non-negative integers.
inline Configuration configurationFromJson(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(std::string("configuration is not valid JSON: ") + e.what());
    }
    if (!j.is_array()) throw std::invalid_argument("configuration must be a JSON array");
    std::vector<Count> counts;
    for (const auto& v : j) {
        if (!v.is_number_integer()) throw std::invalid_argument("configuration entries must be integers");
        counts.push_back(v.get<Count>());
    }
    return Configuration(std::move(counts));
}

inline std::string configurationToJson(const Configuration& config) {
    return nlohmann::json(std::vector<Count>(config.counts().begin(), config.counts().end())).dump();
}

/// Fills the initial-configuration fields of a record.
inline void recordInitial(TrialRecord& record, const Configuration& init) {
    record.initialAdditiveBias = additiveBias(init);
    record.initialMultiplicativeBias = multiplicativeBias(init);
}

inline void recordWinner(TrialRecord& record, const Configuration& init, double xiEff, Opinion winner) {
    record.converged = true;
    record.winner = winner;
    record.winnerSignificantInitially = isSignificant(init, xiEff, winner);
}

}  // namespace usd
