#pragma once

// Analysis-level model of one synchronized phase: independent binomials for
// the decision part, a Polya-Eggenberger urn for the boosting part. Used as
// an oracle for the agent-level simulators.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "usd/core.hpp"

namespace usd {

struct PEParams {
    Count red = 0;
    Count blue = 0;
    Count steps = 0;

    void validate() const {
        if (red < 0 || blue < 0 || steps < 0) throw std::invalid_argument("urn parameters must be non-negative");
        if (steps >= 1 && red + blue == 0) throw std::invalid_argument("urn is empty");
    }
};

/// Probability mass on the integer range [offset, offset + size).
class DiscreteDistribution {
public:
    DiscreteDistribution(Count offset, std::vector<double> probabilities)
        : offset_(offset), p_(std::move(probabilities)) {
        if (p_.empty()) throw std::invalid_argument("distribution needs a non-empty support");
        double total = 0.0;
        for (double v : p_) {
            if (!(v >= 0)) throw std::invalid_argument("probabilities must be non-negative");
            total += v;
        }
        if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("probabilities must sum to one");
    }

    static DiscreteDistribution pointMass(Count x) { return DiscreteDistribution(x, {1.0}); }

    Count lo() const noexcept { return offset_; }
    Count hi() const noexcept { return offset_ + static_cast<Count>(p_.size()) - 1; }
    std::span<const double> probabilities() const noexcept { return p_; }

    double pmf(Count x) const noexcept {
        if (x < lo() || x > hi()) return 0.0;
        return p_[static_cast<std::size_t>(x - offset_)];
    }

    double mean() const noexcept {
        double m = 0.0;
        for (std::size_t i = 0; i < p_.size(); ++i) m += p_[i] * static_cast<double>(offset_ + static_cast<Count>(i));
        return m;
    }

    double total() const noexcept { return std::accumulate(p_.begin(), p_.end(), 0.0); }

private:
    Count offset_;
    std::vector<double> p_;
};

/// Total red balls after running the urn. Each step draws a ball index
/// uniformly from the current urn.
inline Count peSample(const PEParams& p, Rng& rng) {
    p.validate();
    Count red = p.red;
    Count total = p.red + p.blue;
    for (Count s = 0; s < p.steps; ++s) {
        if (static_cast<Count>(uniformBelow(rng, static_cast<std::uint64_t>(total))) < red) ++red;
        ++total;
    }
    return red;
}

/// Exact law of the urn by dynamic programming over red balls added.
/// Entries are transition-weighted probabilities, so no factorials appear.
inline DiscreteDistribution pePmf(const PEParams& p) {
    p.validate();
    std::vector<double> added(static_cast<std::size_t>(p.steps) + 1, 0.0);
    added[0] = 1.0;
    for (Count s = 0; s < p.steps; ++s) {
        const double total = static_cast<double>(p.red + p.blue + s);
        for (Count j = s; j >= 0; --j) {
            const double mass = added[j];
            if (mass == 0.0) continue;
            const double pRed = static_cast<double>(p.red + j) / total;
            added[j + 1] += mass * pRed;
            added[j] = mass * (1.0 - pRed);
        }
    }
    // normalize away accumulated rounding
    const double total = std::accumulate(added.begin(), added.end(), 0.0);
    for (double& v : added) v /= total;
    return DiscreteDistribution(p.red, std::move(added));
}

/// Bin(trials, prob) computed through log-gamma.
inline DiscreteDistribution binomialPmf(Count trials, double prob) {
    if (trials < 0 || !(prob >= 0.0 && prob <= 1.0)) throw std::invalid_argument("invalid binomial parameters");
    std::vector<double> p(static_cast<std::size_t>(trials) + 1, 0.0);
    if (prob == 0.0) {
        p.front() = 1.0;
    } else if (prob == 1.0) {
        p.back() = 1.0;
    } else {
        const double lp = std::log(prob), lq = std::log1p(-prob);
        const double lgn = std::lgamma(static_cast<double>(trials) + 1.0);
        for (Count j = 0; j <= trials; ++j) {
            const double lc = lgn - std::lgamma(static_cast<double>(j) + 1.0) - std::lgamma(static_cast<double>(trials - j) + 1.0);
            p[static_cast<std::size_t>(j)] = std::exp(lc + static_cast<double>(j) * lp + static_cast<double>(trials - j) * lq);
        }
        const double total = std::accumulate(p.begin(), p.end(), 0.0);
        for (double& v : p) v /= total;
    }
    return DiscreteDistribution(0, std::move(p));
}

/// y_i ~ Bin(x_i, x_i / n) independently. The result may sum to zero.
inline std::vector<Count> idealDecisionPart(const Configuration& x, Rng& rng) {
    const double n = static_cast<double>(x.n());
    std::vector<Count> y(x.k(), 0);
    for (std::size_t i = 0; i < x.k(); ++i) {
        if (x[i] == 0) continue;
        std::binomial_distribution<Count> draw(x[i], static_cast<double>(x[i]) / n);
        y[i] = draw(rng);
    }
    return y;
}

/// Sequential urn over all opinions: each undecided agent in turn copies a
/// uniformly chosen already-decided agent. nullopt when nobody is decided
/// (the phase is frozen).
inline std::optional<Configuration> idealBoostingPart(std::span<const Count> decided, Count n, Rng& rng) {
    const Count d = std::accumulate(decided.begin(), decided.end(), Count{0});
    if (d < 0 || d > n) throw std::invalid_argument("decided counts must lie in [0, n]");
    if (std::any_of(decided.begin(), decided.end(), [](Count c) { return c < 0; })) {
        throw std::invalid_argument("decided counts must be non-negative");
    }
    if (d == 0) return std::nullopt;
    std::vector<Opinion> balls;
    balls.reserve(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < decided.size(); ++i) balls.insert(balls.end(), static_cast<std::size_t>(decided[i]), static_cast<Opinion>(i));
    std::vector<Count> out(decided.begin(), decided.end());
    while (static_cast<Count>(balls.size()) < n) {
        const Opinion drawn = balls[uniformBelow(rng, balls.size())];
        balls.push_back(drawn);
        ++out[static_cast<std::size_t>(drawn)];
    }
    return Configuration(std::move(out));
}

struct IdealPhaseResult {
    Configuration config;
    bool frozen = false;
};

inline IdealPhaseResult idealPhase(const Configuration& x, Rng& rng) {
    const auto y = idealDecisionPart(x, rng);
    auto boosted = idealBoostingPart(y, x.n(), rng);
    if (!boosted) return {x, true};
    return {std::move(*boosted), false};
}

/// Exact marginal law of opinion i after one ideal phase, conditioning on
/// (y_i, sum of the other y_j). Cost grows like n^4; meant for n of a few dozen.
inline DiscreteDistribution idealPhaseMarginal(const Configuration& x, std::size_t opinion) {
    if (opinion >= x.k()) throw std::invalid_argument("opinion out of range");
    const Count n = x.n();
    const double nd = static_cast<double>(n);
    const auto own = binomialPmf(x[opinion], static_cast<double>(x[opinion]) / nd);
    // law of the decided agents of all other opinions
    std::vector<double> rest{1.0};
    for (std::size_t j = 0; j < x.k(); ++j) {
        if (j == opinion || x[j] == 0) continue;
        const auto b = binomialPmf(x[j], static_cast<double>(x[j]) / nd);
        std::vector<double> next(rest.size() + static_cast<std::size_t>(x[j]), 0.0);
        for (std::size_t a = 0; a < rest.size(); ++a) {
            for (Count c = 0; c <= x[j]; ++c) next[a + static_cast<std::size_t>(c)] += rest[a] * b.pmf(c);
        }
        rest = std::move(next);
    }
    std::vector<double> out(static_cast<std::size_t>(n) + 1, 0.0);
    for (Count yi = 0; yi <= x[opinion]; ++yi) {
        const double pOwn = own.pmf(yi);
        if (pOwn == 0.0) continue;
        for (std::size_t r = 0; r < rest.size(); ++r) {
            const double w = pOwn * rest[r];
            if (w == 0.0) continue;
            const Count d = yi + static_cast<Count>(r);
            if (d == 0) {
                out[static_cast<std::size_t>(x[opinion])] += w;
                continue;
            }
            const auto pe = pePmf({yi, static_cast<Count>(r), n - d});
            for (Count v = pe.lo(); v <= pe.hi(); ++v) out[static_cast<std::size_t>(v)] += w * pe.pmf(v);
        }
    }
    const double total = std::accumulate(out.begin(), out.end(), 0.0);
    for (double& v : out) v /= total;
    return DiscreteDistribution(0, std::move(out));
}

struct GofResult {
    double chiSquare = 0.0;
    Count degreesOfFreedom = 0;
    double pValue = 1.0;
    double tvDistance = 0.0;
    Count outOfSupport = 0;
};

/// Chi-square over consecutive buckets merged until each expects at least 5
/// samples, plus total-variation distance on the raw support. Samples outside
/// the reference support form a tail bucket of expected mass zero.
inline GofResult gofCompare(std::span<const Count> samples, const DiscreteDistribution& reference) {
    if (samples.empty()) throw std::invalid_argument("gofCompare needs at least one sample");
    const auto size = static_cast<std::size_t>(reference.hi() - reference.lo() + 1);
    std::vector<Count> observed(size, 0);
    GofResult r;
    for (Count s : samples) {
        if (s < reference.lo() || s > reference.hi()) ++r.outOfSupport;
        else ++observed[static_cast<std::size_t>(s - reference.lo())];
    }
    const double total = static_cast<double>(samples.size());
    const auto p = reference.probabilities();

    double tv = static_cast<double>(r.outOfSupport) / total;
    for (std::size_t i = 0; i < size; ++i) tv += std::abs(static_cast<double>(observed[i]) / total - p[i]);
    r.tvDistance = 0.5 * tv;

    std::vector<std::pair<double, double>> buckets;  // (expected, observed)
    double e = 0.0, o = 0.0;
    for (std::size_t i = 0; i < size; ++i) {
        e += p[i] * total;
        o += static_cast<double>(observed[i]);
        if (e >= 5.0) {
            buckets.emplace_back(e, o);
            e = o = 0.0;
        }
    }
    if (e > 0.0 || o > 0.0) {
        if (buckets.empty()) buckets.emplace_back(e, o);
        else {
            buckets.back().first += e;
            buckets.back().second += o;
        }
    }
    if (r.outOfSupport > 0) {
        r.chiSquare = std::numeric_limits<double>::infinity();
        r.degreesOfFreedom = static_cast<Count>(buckets.size());
        r.pValue = 0.0;
        return r;
    }
    for (const auto& [exp, obs] : buckets) {
        if (exp > 0.0) r.chiSquare += (obs - exp) * (obs - exp) / exp;
    }
    r.degreesOfFreedom = static_cast<Count>(buckets.size()) - 1;
    if (r.degreesOfFreedom >= 1) {
        boost::math::chi_squared dist(static_cast<double>(r.degreesOfFreedom));
        r.pValue = boost::math::cdf(boost::math::complement(dist, r.chiSquare));
    }
    return r;
}

struct TailFrequencies {
    double lower = 0.0;
    double upper = 0.0;
};

/// Empirical Pr[A < mu - dev] and Pr[A > mu + dev] with
/// dev = sqrt(a) * (N / (a + b)) * delta, N = a + b + steps, mu = a N / (a + b).
inline TailFrequencies peTailCheck(const PEParams& p, double delta, Count trials, Rng& rng) {
    p.validate();
    if (p.red + p.blue == 0) throw std::invalid_argument("urn is empty");
    if (!(delta > 0) || !(delta < std::sqrt(static_cast<double>(p.red)))) throw std::invalid_argument("delta must lie in (0, sqrt(a))");
    if (trials < 1) throw std::invalid_argument("need at least one trial");
    const double start = static_cast<double>(p.red + p.blue);
    const double N = start + static_cast<double>(p.steps);
    const double mu = static_cast<double>(p.red) / start * N;
    const double dev = std::sqrt(static_cast<double>(p.red)) * (N / start) * delta;
    Count below = 0, above = 0;
    for (Count t = 0; t < trials; ++t) {
        const auto a = static_cast<double>(peSample(p, rng));
        if (a < mu - dev) ++below;
        if (a > mu + dev) ++above;
    }
    return {static_cast<double>(below) / static_cast<double>(trials), static_cast<double>(above) / static_cast<double>(trials)};
}

/// Distribution as a JSON array of [value, probability] pairs.
inline nlohmann::json toJson(const DiscreteDistribution& d) {
    auto out = nlohmann::json::array();
    for (Count x = d.lo(); x <= d.hi(); ++x) out.push_back({x, d.pmf(x)});
    return out;
}

}  // namespace usd
