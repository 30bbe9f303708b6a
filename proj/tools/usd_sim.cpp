// Command-line front end: single runs, seed sweeps and the distribution
// validation suite.
//
//   usd_sim run      --protocol gossip --n 1024 --init one-each --trials 50
//   usd_sim sweep    --protocol gossip --n 1024,4096,16384 --init one-each --trials 50
//   usd_sim validate
//
// Exit codes: 0 success, 1 validation failure, 2 invalid spec or I/O error.

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "usd/harness.hpp"

namespace {

struct Options {
    std::string protocol = "gossip";
    std::vector<usd::Count> n;
    std::string k;  // integer, or "n"
    std::string init = "balanced";
    double tau = 4.0;
    double tbcConst = 4.0;
    double xiEff = 3.0;
    bool noSelf = false;
    bool literal = false;
    bool kUnknown = false;
    usd::Count trials = 1;
    std::uint64_t seed = 0;
    usd::Count maxPhases = 200;
    std::string out = "-";
    std::string format = "jsonl";
    unsigned workers = 1;
};

void addExperimentFlags(CLI::App* cmd, Options& o, bool multipleN) {
    cmd->add_option("--protocol", o.protocol, "population | gossip | uniform | ideal")
        ->check(CLI::IsMember({"population", "gossip", "uniform", "ideal"}));
    if (multipleN) {
        cmd->add_option("--n", o.n, "agent counts, comma separated")->required()->delimiter(',');
    } else {
        cmd->add_option("--n", o.n, "agent count")->required()->expected(1);
    }
    cmd->add_option("--k", o.k, "opinion count, or 'n' (default: n for one-each, else 2)");
    cmd->add_option("--init", o.init, "balanced | biased:<delta> | one-each | file:<path>");
    cmd->add_option("--tau", o.tau, "phase clock constant");
    cmd->add_option("--tbc-const", o.tbcConst, "broadcast budget constant");
    cmd->add_option("--xi-eff", o.xiEff, "significance constant");
    cmd->add_flag("--no-self", o.noSelf, "forbid self-interaction");
    cmd->add_flag("--literal-pseudocode", o.literal, "reset decision flags only for undecided agents");
    cmd->add_flag("--k-unknown", o.kUnknown, "size the gossip broadcast budget from n alone");
    cmd->add_option("--trials", o.trials, "trials per configuration");
    cmd->add_option("--seed", o.seed, "seed of the first trial");
    cmd->add_option("--max-phases", o.maxPhases, "phase cutoff");
    cmd->add_option("--out", o.out, "output path, '-' for stdout");
    cmd->add_option("--format", o.format, "jsonl | csv")->check(CLI::IsMember({"jsonl", "csv"}));
    cmd->add_option("--workers", o.workers, "concurrent trials");
}

usd::ExperimentSpec specFor(const Options& o, usd::Count n) {
    usd::ExperimentSpec spec;
    spec.protocol = usd::parseProtocol(o.protocol);
    spec.init = usd::parseInitMode(o.init);
    auto& p = spec.params;
    p.n = n;
    if (o.k.empty()) {
        if (std::holds_alternative<usd::init::OneEach>(spec.init)) p.k = n;
        else if (const auto* e = std::get_if<usd::init::Explicit>(&spec.init)) p.k = static_cast<usd::Count>(e->counts.size());
        else p.k = 2;
    } else if (o.k == "n") {
        p.k = n;
    } else {
        try {
            p.k = std::stoll(o.k);
        } catch (const std::exception&) {
            throw std::invalid_argument("bad --k '" + o.k + "'");
        }
    }
    p.tau = o.tau;
    p.tbcConst = o.tbcConst;
    p.xiEff = o.xiEff;
    p.allowSelfInteraction = !o.noSelf;
    p.literalPseudocode = o.literal;
    p.kKnown = !o.kUnknown;
    p.maxPhases = o.maxPhases;
    spec.trials = o.trials;
    spec.seedBase = o.seed;
    spec.outputPath = o.out;
    spec.format = o.format == "csv" ? usd::OutputFormat::csv : usd::OutputFormat::jsonl;
    spec.workers = o.workers;
    spec.validate();
    return spec;
}

int runExperiments(const Options& o) {
    std::vector<usd::ExperimentSpec> specs;
    for (usd::Count n : o.n) specs.push_back(specFor(o, n));

    usd::ExperimentResult merged;
    std::vector<std::pair<usd::Count, usd::Summary>> perN;
    for (const auto& spec : specs) {
        auto result = usd::runExperiment(spec);
        perN.emplace_back(spec.params.n, result.summary);
        merged.rows.insert(merged.rows.end(), result.rows.begin(), result.rows.end());
    }
    merged.summary = usd::summarize(merged.rows);

    const auto format = specs.front().format;
    auto emit = [&](std::ostream& out) {
        usd::writeResults(out, merged, format);
        if (perN.size() > 1) {
            for (const auto& [n, s] : perN) {
                nlohmann::ordered_json j;
                j["n"] = n;
                j["summary"] = usd::toJson(s);
                out << (format == usd::OutputFormat::csv ? "# sweep " : "") << j.dump() << '\n';
            }
        }
    };
    if (o.out == "-") {
        emit(std::cout);
    } else {
        std::ofstream file(o.out, std::ios::binary | std::ios::trunc);
        if (!file) throw std::runtime_error("cannot open output file '" + o.out + "'");
        emit(file);
        if (!file.flush()) throw std::runtime_error("failed writing output file '" + o.out + "'");
    }
    return 0;
}

int runValidation() {
    const auto fixtures = usd::defaultFixtures();
    const auto report = usd::validateDistributions(fixtures);
    for (const auto& o : report.outcomes) {
        std::cout << (o.passed ? "PASS " : "FAIL ") << o.fixture << " x=" << nlohmann::json(o.counts).dump()
                  << " opinion=" << o.opinion << " tv=" << o.tv << " p=" << o.pValue << '\n';
    }
    std::cout << (report.passed() ? "validation passed" : "validation FAILED") << '\n';
    return report.passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Synchronized undecided-state dynamics simulator"};
    app.require_subcommand(1);
    Options runOpts, sweepOpts;
    auto* run = app.add_subcommand("run", "run trials for one configuration");
    addExperimentFlags(run, runOpts, false);
    auto* sweep = app.add_subcommand("sweep", "run trials over several n");
    addExperimentFlags(sweep, sweepOpts, true);
    auto* validate = app.add_subcommand("validate", "check simulators against the phase oracle");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*run) return runExperiments(runOpts);
        if (*sweep) return runExperiments(sweepOpts);
        if (*validate) return runValidation();
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
