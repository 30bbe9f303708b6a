#pragma once

// Experiment orchestration: seeded trial sweeps over the four protocols,
// JSON-lines / CSV result rows with a summary block, and the statistical
// validation suite that checks the simulators against the phase oracle.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <thread>
#include <vector>

#include <json.hpp>

#include "usd/core.hpp"
#include "usd/gossip.hpp"
#include "usd/oracle.hpp"
#include "usd/population.hpp"
#include "usd/uniform.hpp"

namespace usd {

enum class Protocol { population, gossip, uniform, ideal };
enum class OutputFormat { jsonl, csv };

inline const char* protocolName(Protocol p) noexcept {
    switch (p) {
        case Protocol::population: return "population";
        case Protocol::gossip: return "gossip";
        case Protocol::uniform: return "uniform";
        case Protocol::ideal: return "ideal";
    }
    return "?";
}

inline Protocol parseProtocol(std::string_view s) {
    for (auto p : {Protocol::population, Protocol::gossip, Protocol::uniform, Protocol::ideal}) {
        if (s == protocolName(p)) return p;
    }
    throw std::invalid_argument("unknown protocol '" + std::string(s) + "'");
}

inline std::string readFile(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// balanced | biased:<delta> | one-each | file:<path> (JSON array of counts)
inline InitMode parseInitMode(std::string_view s) {
    if (s == "balanced") return init::Balanced{};
    if (s == "one-each") return init::OneEach{};
    if (s.starts_with("biased:")) {
        const auto digits = s.substr(7);
        Count delta = 0;
        const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), delta);
        if (ec != std::errc{} || ptr != digits.data() + digits.size() || delta < 0) {
            throw std::invalid_argument("bad bias in '" + std::string(s) + "'");
        }
        return init::Biased{delta};
    }
    if (s.starts_with("file:")) {
        const std::string path(s.substr(5));
        std::string text;
        try {
            text = readFile(path);
        } catch (const std::runtime_error& e) {
            throw std::invalid_argument(e.what());
        }
        const auto config = configurationFromJson(text);
        return init::Explicit{std::vector<Count>(config.counts().begin(), config.counts().end())};
    }
    throw std::invalid_argument("unknown init mode '" + std::string(s) + "'");
}

struct ExperimentSpec {
    Protocol protocol = Protocol::gossip;
    ProtocolParams params;
    InitMode init = init::Balanced{};
    Count trials = 1;
    std::uint64_t seedBase = 0;
    std::string outputPath;  // empty: caller handles output
    OutputFormat format = OutputFormat::jsonl;
    unsigned workers = 1;

    void validate() const {
        params.validate();
        if (trials < 1) throw std::invalid_argument("trials must be >= 1");
        if (workers < 1) throw std::invalid_argument("workers must be >= 1");
        (void)makeInitial(params.n, params.k, init);
    }
};

/// One output row: the trial record plus the context it came from.
struct TrialRow {
    Protocol protocol = Protocol::gossip;
    Count n = 0;
    Count k = 0;
    std::uint64_t seed = 0;
    Opinion initialPlurality = 0;
    TrialRecord record;

    friend bool operator==(const TrialRow&, const TrialRow&) = default;
};

struct Summary {
    Count trials = 0;
    Count converged = 0;
    double convergenceRate = 0.0;
    std::optional<double> medianPhases;  // over converged trials
    double pluralityWinRate = 0.0;
    std::optional<double> winnerSignificantRate;  // over converged trials

    friend bool operator==(const Summary&, const Summary&) = default;
};

struct ExperimentResult {
    std::vector<TrialRow> rows;
    Summary summary;
};

/// Repeats ideal phases until unanimity; frozen phases count as phases.
inline RunResult runIdeal(const ProtocolParams& params, const Configuration& initConfig, const RunOptions& options = {}) {
    params.validate();
    if (initConfig.n() != params.n || static_cast<Count>(initConfig.k()) != params.k) {
        throw std::invalid_argument("initial configuration must match n and k");
    }
    Rng rng(params.seed);
    RunResult result{TrialRecord{}, initConfig, {}};
    recordInitial(result.record, initConfig);
    if (options.recordSnapshots) result.snapshots.push_back(initConfig);
    Configuration x = initConfig;
    Count phases = 0;
    while (!x.unanimous() && phases < params.maxPhases) {
        x = idealPhase(x, rng).config;
        ++phases;
        if (options.recordSnapshots) result.snapshots.push_back(x);
    }
    result.record.phases = phases;
    result.final = x;
    if (x.unanimous()) recordWinner(result.record, initConfig, params.xiEff, x.argmax());
    return result;
}

inline RunResult runProtocol(Protocol protocol, const ProtocolParams& params, const Configuration& initConfig,
                             const RunOptions& options = {}) {
    switch (protocol) {
        case Protocol::population: return runPopulation(params, initConfig, options);
        case Protocol::gossip: return runGossip(params, initConfig, options);
        case Protocol::uniform: return runUniform(params, initConfig, options);
        case Protocol::ideal: return runIdeal(params, initConfig, options);
    }
    throw std::invalid_argument("unknown protocol");
}

namespace detail {
inline double median(std::vector<Count> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    if (v.size() % 2 == 1) return static_cast<double>(v[m]);
    return 0.5 * (static_cast<double>(v[m - 1]) + static_cast<double>(v[m]));
}
}  // namespace detail

inline Summary summarize(std::span<const TrialRow> rows) {
    Summary s;
    s.trials = static_cast<Count>(rows.size());
    std::vector<Count> phases;
    Count plurality = 0, significant = 0;
    for (const auto& row : rows) {
        const auto& r = row.record;
        if (r.converged) {
            ++s.converged;
            phases.push_back(r.phases);
            if (r.winnerSignificantInitially) ++significant;
        }
        if (r.winner && *r.winner == row.initialPlurality) ++plurality;
    }
    if (s.trials > 0) {
        s.convergenceRate = static_cast<double>(s.converged) / static_cast<double>(s.trials);
        s.pluralityWinRate = static_cast<double>(plurality) / static_cast<double>(s.trials);
    }
    if (!phases.empty()) {
        s.medianPhases = detail::median(std::move(phases));
        s.winnerSignificantRate = static_cast<double>(significant) / static_cast<double>(s.converged);
    }
    return s;
}

/// One record per seed seedBase .. seedBase + trials - 1, in seed order
/// whatever the worker count.
inline ExperimentResult runExperiment(const ExperimentSpec& spec) {
    spec.validate();
    const Configuration initConfig = makeInitial(spec.params.n, spec.params.k, spec.init);
    std::vector<TrialRow> rows(static_cast<std::size_t>(spec.trials));
    std::atomic<Count> next{0};
    std::vector<std::exception_ptr> failures(static_cast<std::size_t>(spec.trials));
    auto work = [&] {
        for (Count i = next++; i < spec.trials; i = next++) try {
            ProtocolParams params = spec.params;
            params.seed = spec.seedBase + static_cast<std::uint64_t>(i);
            auto& row = rows[static_cast<std::size_t>(i)];
            row.protocol = spec.protocol;
            row.n = params.n;
            row.k = params.k;
            row.seed = params.seed;
            row.initialPlurality = initConfig.argmax();
            row.record = runProtocol(spec.protocol, params, initConfig).record;
        } catch (...) {
            failures[static_cast<std::size_t>(i)] = std::current_exception();
        }
    };
    const unsigned workers = std::min<unsigned>(spec.workers, static_cast<unsigned>(spec.trials));
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    for (const auto& f : failures) {
        if (f) std::rethrow_exception(f);
    }
    ExperimentResult result{std::move(rows), {}};
    result.summary = summarize(result.rows);
    return result;
}

// -- serialization ----------------------------------------------------------

namespace detail {

inline std::string formatDouble(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

inline double parseDouble(std::string_view s) {
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw std::invalid_argument("bad number '" + std::string(s) + "'");
    return v;
}

template <class Int>
Int parseInt(std::string_view s) {
    Int v{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw std::invalid_argument("bad integer '" + std::string(s) + "'");
    return v;
}

template <class T>
nlohmann::ordered_json optionalJson(const std::optional<T>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

template <class T>
std::optional<T> optionalFrom(const nlohmann::ordered_json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<T>();
}

}  // namespace detail

inline const std::vector<std::string>& csvColumns(bool withUniform) {
    static const std::vector<std::string> base{"protocol", "n", "k", "seed", "converged", "winner", "phases",
                                               "interactions", "rounds", "parallel_time", "winner_significant",
                                               "initial_additive_bias", "initial_multiplicative_bias", "initial_plurality"};
    static const std::vector<std::string> extended = [] {
        auto cols = base;
        cols.insert(cols.end(), {"t_final", "rho_round", "t_adoption_round"});
        return cols;
    }();
    return withUniform ? extended : base;
}

inline nlohmann::ordered_json toJson(const TrialRow& row) {
    const auto& r = row.record;
    nlohmann::ordered_json j;
    j["protocol"] = protocolName(row.protocol);
    j["n"] = row.n;
    j["k"] = row.k;
    j["seed"] = row.seed;
    j["converged"] = r.converged;
    j["winner"] = detail::optionalJson(r.winner);
    j["phases"] = r.phases;
    j["interactions"] = r.interactions;
    j["rounds"] = r.rounds;
    j["parallel_time"] = r.parallelTime;
    j["winner_significant"] = r.winnerSignificantInitially;
    j["initial_additive_bias"] = r.initialAdditiveBias;
    // JSON has no infinity; null marks a runner-up with zero support
    j["initial_multiplicative_bias"] =
        std::isinf(r.initialMultiplicativeBias) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(r.initialMultiplicativeBias);
    j["initial_plurality"] = row.initialPlurality;
    if (r.uniform) {
        j["t_final"] = r.uniform->tFinal;
        j["rho_round"] = detail::optionalJson(r.uniform->rhoRound);
        j["t_adoption_round"] = detail::optionalJson(r.uniform->tAdoptionRound);
    }
    return j;
}

inline TrialRow rowFromJson(const nlohmann::ordered_json& j) {
    TrialRow row;
    row.protocol = parseProtocol(j.at("protocol").get<std::string>());
    row.n = j.at("n").get<Count>();
    row.k = j.at("k").get<Count>();
    row.seed = j.at("seed").get<std::uint64_t>();
    row.initialPlurality = j.at("initial_plurality").get<Opinion>();
    auto& r = row.record;
    r.converged = j.at("converged").get<bool>();
    r.winner = detail::optionalFrom<Opinion>(j.at("winner"));
    r.phases = j.at("phases").get<Count>();
    r.interactions = j.at("interactions").get<Count>();
    r.rounds = j.at("rounds").get<Count>();
    r.parallelTime = j.at("parallel_time").get<double>();
    r.winnerSignificantInitially = j.at("winner_significant").get<bool>();
    r.initialAdditiveBias = j.at("initial_additive_bias").get<Count>();
    const auto& mb = j.at("initial_multiplicative_bias");
    r.initialMultiplicativeBias = mb.is_null() ? std::numeric_limits<double>::infinity() : mb.get<double>();
    if (j.contains("t_final")) {
        r.uniform = UniformDiagnostics{j.at("t_final").get<Count>(), detail::optionalFrom<Count>(j.at("rho_round")),
                                       detail::optionalFrom<Count>(j.at("t_adoption_round"))};
    }
    return row;
}

inline nlohmann::ordered_json toJson(const Summary& s) {
    nlohmann::ordered_json j;
    j["trials"] = s.trials;
    j["converged"] = s.converged;
    j["convergence_rate"] = s.convergenceRate;
    j["median_phases"] = detail::optionalJson(s.medianPhases);
    j["plurality_win_rate"] = s.pluralityWinRate;
    j["winner_significant_rate"] = detail::optionalJson(s.winnerSignificantRate);
    return j;
}

inline Summary summaryFromJson(const nlohmann::ordered_json& j) {
    Summary s;
    s.trials = j.at("trials").get<Count>();
    s.converged = j.at("converged").get<Count>();
    s.convergenceRate = j.at("convergence_rate").get<double>();
    s.medianPhases = detail::optionalFrom<double>(j.at("median_phases"));
    s.pluralityWinRate = j.at("plurality_win_rate").get<double>();
    s.winnerSignificantRate = detail::optionalFrom<double>(j.at("winner_significant_rate"));
    return s;
}

inline std::string toCsvLine(const TrialRow& row, bool withUniform) {
    const auto& r = row.record;
    std::vector<std::string> cells{protocolName(row.protocol),
                                   std::to_string(row.n),
                                   std::to_string(row.k),
                                   std::to_string(row.seed),
                                   r.converged ? "true" : "false",
                                   r.winner ? std::to_string(*r.winner) : "",
                                   std::to_string(r.phases),
                                   std::to_string(r.interactions),
                                   std::to_string(r.rounds),
                                   detail::formatDouble(r.parallelTime),
                                   r.winnerSignificantInitially ? "true" : "false",
                                   std::to_string(r.initialAdditiveBias),
                                   detail::formatDouble(r.initialMultiplicativeBias),
                                   std::to_string(row.initialPlurality)};
    if (withUniform) {
        const auto diag = r.uniform.value_or(UniformDiagnostics{});
        cells.push_back(std::to_string(diag.tFinal));
        cells.push_back(diag.rhoRound ? std::to_string(*diag.rhoRound) : "");
        cells.push_back(diag.tAdoptionRound ? std::to_string(*diag.tAdoptionRound) : "");
    }
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) line += ',';
        line += cells[i];
    }
    return line;
}

inline TrialRow rowFromCsv(std::string_view line) {
    std::vector<std::string_view> cells;
    while (true) {
        const auto comma = line.find(',');
        cells.push_back(line.substr(0, comma));
        if (comma == std::string_view::npos) break;
        line.remove_prefix(comma + 1);
    }
    if (cells.size() != csvColumns(false).size() && cells.size() != csvColumns(true).size()) {
        throw std::invalid_argument("unexpected CSV column count");
    }
    auto boolean = [](std::string_view s) {
        if (s == "true") return true;
        if (s == "false") return false;
        throw std::invalid_argument("bad boolean '" + std::string(s) + "'");
    };
    TrialRow row;
    row.protocol = parseProtocol(cells[0]);
    row.n = detail::parseInt<Count>(cells[1]);
    row.k = detail::parseInt<Count>(cells[2]);
    row.seed = detail::parseInt<std::uint64_t>(cells[3]);
    auto& r = row.record;
    r.converged = boolean(cells[4]);
    if (!cells[5].empty()) r.winner = detail::parseInt<Opinion>(cells[5]);
    r.phases = detail::parseInt<Count>(cells[6]);
    r.interactions = detail::parseInt<Count>(cells[7]);
    r.rounds = detail::parseInt<Count>(cells[8]);
    r.parallelTime = detail::parseDouble(cells[9]);
    r.winnerSignificantInitially = boolean(cells[10]);
    r.initialAdditiveBias = detail::parseInt<Count>(cells[11]);
    r.initialMultiplicativeBias = detail::parseDouble(cells[12]);
    row.initialPlurality = detail::parseInt<Opinion>(cells[13]);
    if (cells.size() == csvColumns(true).size()) {
        UniformDiagnostics d;
        d.tFinal = detail::parseInt<Count>(cells[14]);
        if (!cells[15].empty()) d.rhoRound = detail::parseInt<Count>(cells[15]);
        if (!cells[16].empty()) d.tAdoptionRound = detail::parseInt<Count>(cells[16]);
        r.uniform = d;
    }
    return row;
}

/// Rows followed by the summary. JSONL: one object per row, then
/// {"summary": {...}}. CSV: header, rows, then "# summary " + JSON.
inline void writeResults(std::ostream& out, const ExperimentResult& result, OutputFormat format) {
    if (format == OutputFormat::jsonl) {
        for (const auto& row : result.rows) out << toJson(row).dump() << '\n';
        nlohmann::ordered_json s;
        s["summary"] = toJson(result.summary);
        out << s.dump() << '\n';
        return;
    }
    const bool withUniform = std::any_of(result.rows.begin(), result.rows.end(), [](const auto& r) { return r.record.uniform.has_value(); });
    const auto& cols = csvColumns(withUniform);
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << '\n';
    for (const auto& row : result.rows) out << toCsvLine(row, withUniform) << '\n';
    out << "# summary " << toJson(result.summary).dump() << '\n';
}

/// Parses output written by writeResults back into rows and summary.
inline ExperimentResult readResults(std::istream& in, OutputFormat format) {
    ExperimentResult result;
    std::string line;
    bool header = format == OutputFormat::csv;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (format == OutputFormat::jsonl) {
            const auto j = nlohmann::ordered_json::parse(line);
            if (j.contains("summary")) result.summary = summaryFromJson(j.at("summary"));
            else result.rows.push_back(rowFromJson(j));
        } else if (header) {
            header = false;
        } else if (line.starts_with("# summary ")) {
            result.summary = summaryFromJson(nlohmann::ordered_json::parse(line.substr(10)));
        } else {
            result.rows.push_back(rowFromCsv(line));
        }
    }
    return result;
}

inline void writeResultsFile(const std::string& path, const ExperimentResult& result, OutputFormat format) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open output file '" + path + "'");
    writeResults(out, result, format);
    out.flush();
    if (!out) throw std::runtime_error("failed writing output file '" + path + "'");
}

// -- distribution validation ------------------------------------------------

enum class FixtureKind {
    simulatorDecision,  // gossip decision round vs Bin(x_i, x_i / n)
    idealDecision,      // oracle decision sampler vs Bin(x_i, x_i / n)
    boosting,           // boosting sampler marginals vs PE(y_i, |y| - y_i, n - |y|)
    gossipPhase,        // one full gossip phase vs the exact ideal-phase marginal
};

struct ValidationFixture {
    std::string name;
    FixtureKind kind = FixtureKind::boosting;
    std::vector<Count> counts;  // x, or decided counts y for boosting fixtures
    Count n = 0;
    Count samples = 0;
    double maxTv = 0.0;
    double minPValue = 0.0;  // 0 disables the chi-square gate
    std::uint64_t seed = 1;
};

using BoostingSampler = std::function<std::optional<Configuration>(std::span<const Count>, Count, Rng&)>;

struct FixtureOutcome {
    std::string fixture;
    std::vector<Count> counts;
    Opinion opinion = 0;
    double tv = 0.0;
    double pValue = 1.0;
    bool passed = false;
};

struct ValidationReport {
    std::vector<FixtureOutcome> outcomes;
    bool passed() const {
        return std::all_of(outcomes.begin(), outcomes.end(), [](const auto& o) { return o.passed; });
    }
};

/// Broadcast budget used when a gossip phase must complete its boosting part.
inline constexpr Count kCrossValidationTbc = 200;

/// Per-opinion samples of decided counts after one simulated decision round from x.
inline std::vector<std::vector<Count>> sampleSimulatorDecision(const Configuration& x, Count samples, std::uint64_t seed) {
    ProtocolParams params;
    params.n = x.n();
    params.k = static_cast<Count>(x.k());
    std::vector<std::vector<Count>> out(x.k());
    for (Count s = 0; s < samples; ++s) {
        params.seed = seed + static_cast<std::uint64_t>(s);
        GossipSim sim(params, x);
        sim.gossipRound();
        const auto y = sim.decidedCounts();
        for (std::size_t i = 0; i < x.k(); ++i) out[i].push_back(y[i]);
    }
    return out;
}

/// Per-opinion supports at the next phase boundary of a gossip run from x.
inline std::vector<std::vector<Count>> sampleGossipPhase(const Configuration& x, Count samples, std::uint64_t seed) {
    ProtocolParams params;
    params.n = x.n();
    params.k = static_cast<Count>(x.k());
    params.tbcRounds = kCrossValidationTbc;
    std::vector<std::vector<Count>> out(x.k());
    for (Count s = 0; s < samples; ++s) {
        params.seed = seed + static_cast<std::uint64_t>(s);
        GossipSim sim(params, x);
        sim.finishPhase();
        const auto c = sim.configuration();
        for (std::size_t i = 0; i < x.k(); ++i) out[i].push_back(c[i]);
    }
    return out;
}

inline std::vector<ValidationFixture> defaultFixtures() {
    return {
        {"simulator-decision", FixtureKind::simulatorDecision, {400, 300, 200, 100}, 1000, 100000, 0.02, 1e-3, 11},
        {"ideal-decision", FixtureKind::idealDecision, {400, 300, 200, 100}, 1000, 100000, 0.02, 1e-3, 12},
        {"boosting-urn", FixtureKind::boosting, {3, 2}, 10, 100000, 0.02, 1e-3, 13},
        {"gossip-phase", FixtureKind::gossipPhase, {6, 4}, 10, 100000, 0.05, 0.0, 14},
    };
}

inline ValidationReport validateDistributions(std::span<const ValidationFixture> fixtures,
                                              const BoostingSampler& boost = idealBoostingPart) {
    if (fixtures.empty()) throw std::invalid_argument("no fixtures");
    ValidationReport report;
    for (const auto& f : fixtures) {
        if (f.samples < 1) throw std::invalid_argument("fixture '" + f.name + "' needs samples");
        std::vector<std::vector<Count>> samples(f.counts.size());
        std::vector<DiscreteDistribution> refs;
        switch (f.kind) {
            case FixtureKind::simulatorDecision:
            case FixtureKind::idealDecision: {
                const Configuration x(f.counts);
                if (x.n() != f.n) throw std::invalid_argument("fixture '" + f.name + "' counts must sum to n");
                if (f.kind == FixtureKind::simulatorDecision) {
                    samples = sampleSimulatorDecision(x, f.samples, f.seed);
                } else {
                    Rng rng(f.seed);
                    for (Count s = 0; s < f.samples; ++s) {
                        const auto y = idealDecisionPart(x, rng);
                        for (std::size_t i = 0; i < y.size(); ++i) samples[i].push_back(y[i]);
                    }
                }
                for (std::size_t i = 0; i < x.k(); ++i) refs.push_back(binomialPmf(x[i], static_cast<double>(x[i]) / static_cast<double>(x.n())));
                break;
            }
            case FixtureKind::boosting: {
                const Count d = std::accumulate(f.counts.begin(), f.counts.end(), Count{0});
                if (d < 1 || d > f.n) throw std::invalid_argument("fixture '" + f.name + "' needs 1 <= |y| <= n");
                Rng rng(f.seed);
                for (Count s = 0; s < f.samples; ++s) {
                    const auto out = boost(f.counts, f.n, rng);
                    if (!out) throw std::invalid_argument("fixture '" + f.name + "': boosting sampler reported a frozen phase");
                    for (std::size_t i = 0; i < f.counts.size(); ++i) samples[i].push_back((*out)[i]);
                }
                for (std::size_t i = 0; i < f.counts.size(); ++i) refs.push_back(pePmf({f.counts[i], d - f.counts[i], f.n - d}));
                break;
            }
            case FixtureKind::gossipPhase: {
                const Configuration x(f.counts);
                if (x.n() != f.n) throw std::invalid_argument("fixture '" + f.name + "' counts must sum to n");
                samples = sampleGossipPhase(x, f.samples, f.seed);
                for (std::size_t i = 0; i < x.k(); ++i) refs.push_back(idealPhaseMarginal(x, i));
                break;
            }
        }
        for (std::size_t i = 0; i < refs.size(); ++i) {
            const auto g = gofCompare(samples[i], refs[i]);
            FixtureOutcome o{f.name, f.counts, static_cast<Opinion>(i), g.tvDistance, g.pValue, false};
            o.passed = g.tvDistance < f.maxTv && (f.minPValue <= 0.0 || g.pValue >= f.minPValue);
            report.outcomes.push_back(std::move(o));
        }
    }
    return report;
}

}  // namespace usd
