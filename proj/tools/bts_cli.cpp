// Command-line front end for the batched Thompson sampling simulator.
//
//   bts run              --synthetic articles=200,arms=3 --interval 5 --out out/
//   bts sweep            --corpus corpus.jsonl --sweep-intervals 1,5,60
//   bts stress           --synthetic articles=50 --stress-repeats 4
//   bts baseline-compare --corpus corpus.jsonl
//   bts generate         --synthetic articles=500 --seed 7 --out corpus/
//
// Exit codes: 0 success, 1 configuration error, 2 data error, 3 internal error.

#include <cstdlib>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bts/errors.hpp"
#include "bts/experiment.hpp"

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitInternal = 3;

struct Flags {
    std::string corpus;
    std::string synthetic;
    bts::Minutes interval = 5;
    std::string method = "sum";
    double horizon_hours = 48.0;
    std::uint64_t seed = 0;
    std::string sweep_intervals;
    std::string sweep_methods = "sum,norm";
    std::string out;
    std::size_t window = bts::kDefaultStableWindow;
    std::size_t bootstrap = 2000;
    std::size_t stress_repeats = 1;
    unsigned threads = 1;
};

void add_common_flags(CLI::App& cmd, Flags& f) {
    cmd.add_option("--corpus", f.corpus, "JSON Lines corpus file");
    cmd.add_option("--synthetic", f.synthetic,
                   "Synthetic corpus spec, e.g. articles=200,arms=3,theta=0.02:0.08,gap=0.2");
    cmd.add_option("--interval", f.interval, "Update interval in minutes")->capture_default_str();
    cmd.add_option("--method", f.method, "Update method: sum|norm")->capture_default_str();
    cmd.add_option("--horizon-hours", f.horizon_hours, "Simulation horizon in hours")->capture_default_str();
    cmd.add_option("--seed", f.seed, "Master seed")->capture_default_str();
    cmd.add_option("--out", f.out, "Output directory (default: $BTS_OUT_DIR or ./bts_out)");
    cmd.add_option("--window", f.window, "Stable window in batches for convergence")->capture_default_str();
    cmd.add_option("--threads", f.threads, "Worker threads over articles")->capture_default_str();
}

std::vector<bts::UpdateMethod> parse_methods(const std::string& text) {
    std::vector<bts::UpdateMethod> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = text.find(',', start);
        out.push_back(bts::parse_update_method(text.substr(start, pos - start)));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

bts::ExperimentConfig build_config(bts::Command command, const Flags& f, int argc, char** argv) {
    bts::ExperimentConfig config;
    config.command = command;
    config.argv.assign(argv, argv + argc);
    if (!f.corpus.empty()) config.corpus_path = f.corpus;
    if (!f.synthetic.empty() || (f.corpus.empty() && command == bts::Command::Generate)) {
        config.synthetic = bts::parse_synthetic_spec(f.synthetic);
    }
    config.sim.update_interval = f.interval;
    config.sim.update_method = bts::parse_update_method(f.method);
    const double horizon = f.horizon_hours * 60.0;
    if (!(horizon >= 1.0) || horizon != static_cast<double>(static_cast<bts::Minutes>(horizon))) {
        throw bts::ConfigError("horizon-hours: must be a positive whole number of minutes");
    }
    config.sim.horizon = static_cast<bts::Minutes>(horizon);
    config.sim.master_seed = f.seed;
    if (!f.sweep_intervals.empty()) config.sweep_intervals = bts::parse_interval_list(f.sweep_intervals);
    config.sweep_methods = parse_methods(f.sweep_methods);
    config.stable_window = f.window;
    config.bootstrap_resamples = f.bootstrap;
    config.stress_repeats = f.stress_repeats;
    config.threads = f.threads;
    if (!f.out.empty()) {
        config.out_dir = f.out;
    } else if (const char* env = std::getenv("BTS_OUT_DIR"); env != nullptr && *env != '\0') {
        config.out_dir = env;
    }
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Batched Thompson sampling headline-test simulator"};
    app.require_subcommand(1);
    Flags flags;

    auto* run = app.add_subcommand("run", "Simulate bTS over a corpus: convergence, time to optimize, lifespans");
    auto* sweep = app.add_subcommand("sweep", "Update method x update interval grid");
    auto* stress = app.add_subcommand("stress", "Self-correction from a worst-arm-favouring prior");
    auto* compare = app.add_subcommand("baseline-compare", "bTS vs test-rollout: click gain, sub-optimal exposure");
    auto* generate = app.add_subcommand("generate", "Write a synthetic corpus as JSON Lines");
    for (auto* cmd : {run, sweep, stress, compare, generate}) add_common_flags(*cmd, flags);
    sweep->add_option("--sweep-intervals", flags.sweep_intervals, "Comma-separated intervals in minutes");
    sweep->add_option("--sweep-methods", flags.sweep_methods, "Comma-separated methods")->capture_default_str();
    compare->add_option("--bootstrap", flags.bootstrap, "Bootstrap resamples")->capture_default_str();
    stress->add_option("--stress-repeats", flags.stress_repeats, "Seeded runs per article")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    bts::Command command = bts::Command::Run;
    if (sweep->parsed()) command = bts::Command::Sweep;
    if (stress->parsed()) command = bts::Command::Stress;
    if (compare->parsed()) command = bts::Command::BaselineCompare;
    if (generate->parsed()) command = bts::Command::Generate;

    std::string out_dir;
    try {
        const auto config = build_config(command, flags, argc, argv);
        out_dir = config.out_dir.string();
        const auto outcome = bts::run_experiment(config);
        for (const auto& w : outcome.report["warnings"]) std::cerr << "warning: " << w.get<std::string>() << '\n';
        for (const auto& p : outcome.artifacts) std::cout << p.string() << '\n';
        return 0;
    } catch (const bts::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const bts::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const bts::InputError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        if (!out_dir.empty()) std::cerr << "note: artifacts in '" << out_dir << "' may be partial\n";
        return kExitInternal;
    }
}
