#include "bts/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <sstream>

#include "bts/baseline.hpp"
#include "bts/corpus_io.hpp"
#include "bts/errors.hpp"

#ifndef BTS_CODE_VERSION
#define BTS_CODE_VERSION "unknown"
#endif

namespace bts {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string_view code_version() noexcept { return BTS_CODE_VERSION; }

std::string_view to_string(Command command) noexcept {
    switch (command) {
        case Command::Run: return "run";
        case Command::Sweep: return "sweep";
        case Command::Stress: return "stress";
        case Command::BaselineCompare: return "baseline-compare";
        case Command::Generate: return "generate";
    }
    return "unknown";
}

namespace {

std::vector<std::string_view> split(std::string_view text, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = text.find(sep, start);
        out.push_back(text.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

template <class T>
T parse_number(std::string_view text, const std::string& field) {
    T value{};
    const char* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end || text.empty()) {
        throw ConfigError(field + ": cannot parse '" + std::string(text) + "'");
    }
    return value;
}

template <class T>
std::pair<T, T> parse_range(std::string_view text, const std::string& field) {
    const auto parts = split(text, ':');
    if (parts.size() == 1) {
        const T v = parse_number<T>(parts[0], field);
        return {v, v};
    }
    if (parts.size() != 2) throw ConfigError(field + ": expected N or MIN:MAX, got '" + std::string(text) + "'");
    return {parse_number<T>(parts[0], field), parse_number<T>(parts[1], field)};
}

ordered_json maybe_minutes(const MaybeMinutes& m) {
    return m ? ordered_json(*m) : ordered_json(nullptr);
}

ordered_json sim_to_json(const SimConfig& sim) {
    return ordered_json{{"update_interval", sim.update_interval},
                        {"horizon", sim.horizon},
                        {"update_method", to_string(sim.update_method)},
                        {"master_seed", sim.master_seed},
                        {"testing_minutes", sim.testing_minutes}};
}

ordered_json corpus_params_to_json(const CorpusParams& p) {
    return ordered_json{{"articles", p.article_count},
                        {"min_arms", p.min_arms},
                        {"max_arms", p.max_arms},
                        {"theta_min", p.theta_min},
                        {"theta_max", p.theta_max},
                        {"min_relative_gap", p.min_relative_gap},
                        {"min_impressions", p.min_impressions},
                        {"max_impressions", p.max_impressions},
                        {"first_hour_share", p.first_hour_share},
                        {"share_jitter", p.share_jitter},
                        {"trace_minutes", p.trace_minutes}};
}

ordered_json sweep_to_json(const SweepReport& report) {
    ordered_json cells = ordered_json::array();
    for (const auto& c : report.cells) {
        cells.push_back({{"method", to_string(c.method)},
                         {"interval", c.interval},
                         {"total_clicks", c.total_clicks},
                         {"delta", c.delta}});
    }
    return ordered_json{{"reference", report.reference}, {"cells", std::move(cells)}};
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

class ArtifactWriter {
public:
    explicit ArtifactWriter(fs::path dir) : dir_(std::move(dir)) {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec) throw ConfigError("out: cannot create '" + dir_.string() + "': " + ec.message());
    }

    void write(const std::string& name, const std::string& content) {
        const fs::path path = dir_ / name;
        std::ofstream out(path, std::ios::binary);
        out << content;
        if (!out) throw ConfigError("out: cannot write '" + path.string() + "'");
        written_.push_back(path);
    }

    const std::vector<fs::path>& written() const noexcept { return written_; }
    const fs::path& dir() const noexcept { return dir_; }

private:
    fs::path dir_;
    std::vector<fs::path> written_;
};

ordered_json summarize_corpus(const ExperimentConfig& config, std::span<const ArticleSpec> corpus) {
    std::ostringstream serialized;
    write_corpus(serialized, corpus);
    std::int64_t impressions = 0;
    for (const auto& a : corpus) impressions += a.trace.total();
    ordered_json source = config.corpus_path ? ordered_json{{"file", config.corpus_path->string()}}
                                             : ordered_json{{"synthetic", corpus_params_to_json(*config.synthetic)}};
    return ordered_json{{"source", std::move(source)},
                        {"articles", corpus.size()},
                        {"impressions", impressions},
                        {"digest", hex64(hash_id(serialized.str()))}};
}

ordered_json invariant_section(std::span<const ArticleResult> results, std::span<const ArticleSpec> corpus,
                               const SimConfig& sim) {
    ordered_json violations = ordered_json::array();
    for (std::size_t i = 0; i < results.size(); ++i) {
        for (auto& v : invariant_violations(results[i], corpus[i], sim)) violations.push_back(std::move(v));
    }
    return ordered_json{{"articles_checked", results.size()}, {"violations", std::move(violations)}};
}

void command_run(const ExperimentConfig& config, std::span<const ArticleSpec> corpus, ordered_json& report,
                 ArtifactWriter& out) {
    const auto results = run_corpus(corpus, config.sim, config.threads);
    std::vector<MaybeMinutes> times, lifespans;
    std::size_t converged = 0;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        times.push_back(time_to_optimize(results[i], corpus[i]));
        lifespans.push_back(active_lifespan(corpus[i].trace));
        if (convergence_verdict(results[i], corpus[i], config.stable_window).converged_correctly) ++converged;
    }
    std::size_t within_horizon = 0;
    for (const auto& l : lifespans) within_horizon += (*l < config.sim.horizon);
    std::size_t not_achieved = std::count(times.begin(), times.end(), std::nullopt);

    report["metrics"] = ordered_json{
        {"false_convergence_rate", false_convergence_rate(results, corpus, config.stable_window)},
        {"converged_articles", converged},
        {"stable_window_batches", config.stable_window},
        {"time_to_optimize",
         {{"p50_minutes", maybe_minutes(percentile(times, 0.5))},
          {"p80_minutes", maybe_minutes(percentile(times, 0.8))},
          {"not_achieved", not_achieved}}},
        {"active_lifespan",
         {{"p50_minutes", maybe_minutes(percentile(lifespans, 0.5))},
          {"p95_minutes", maybe_minutes(percentile(lifespans, 0.95))},
          {"share_within_horizon", static_cast<double>(within_horizon) / static_cast<double>(corpus.size())}}},
        {"total_clicks", [&] {
             std::int64_t c = 0;
             for (const auto& r : results) c += r.total_clicks();
             return c;
         }()}};
    report["invariants"] = invariant_section(results, corpus, config.sim);
    out.write("active_lifespan.csv", histogram_csv(histogram(lifespans, 60, config.sim.horizon)));
    out.write("time_to_optimize.csv", histogram_csv(histogram(times, 5, 65)));
}

void command_baseline_compare(const ExperimentConfig& config, std::span<const ArticleSpec> corpus,
                              ordered_json& report) {
    const auto bts = run_corpus(corpus, config.sim, config.threads);
    const auto base = run_baseline_corpus(corpus, config.sim, config.threads);
    const GainReport gain = click_gain(bts, base);
    const std::uint64_t boot_seed = mix_seed(config.sim.master_seed, 0xB007);
    const auto first = bootstrap_gain(bts, base, GainPeriod::FirstHour, config.bootstrap_resamples, boot_seed);
    const auto total = bootstrap_gain(bts, base, GainPeriod::Total, config.bootstrap_resamples, boot_seed);
    const SuboptimalReport sub = suboptimal_impressions(bts, base, corpus);
    std::size_t winner_correct = 0;
    for (std::size_t i = 0; i < corpus.size(); ++i) winner_correct += (base[i].winner == corpus[i].optimal_arm());

    report["metrics"] = ordered_json{
        {"click_gain",
         {{"first_hour", gain.first_hour},
          {"remaining", gain.remaining},
          {"total", gain.total},
          {"bts_clicks", {{"first_hour", gain.treatment.first_hour}, {"remaining", gain.treatment.remaining}}},
          {"baseline_clicks", {{"first_hour", gain.reference.first_hour}, {"remaining", gain.reference.remaining}}},
          {"first_hour_ci", {{"lower", first.lower}, {"upper", first.upper}, {"level", first.level}}},
          {"total_ci", {{"lower", total.lower}, {"upper", total.upper}, {"level", total.level}}},
          {"bootstrap_resamples", config.bootstrap_resamples}}},
        {"suboptimal_impressions",
         {{"bts", sub.bts}, {"baseline", sub.baseline}, {"decrease", sub.decrease}}},
        {"baseline_winner_accuracy", static_cast<double>(winner_correct) / static_cast<double>(corpus.size())},
        {"pairing", "bTS and baseline read the same per-arm response streams for each article"}};
    report["invariants"] = invariant_section(bts, corpus, config.sim);
}

void command_sweep(const ExperimentConfig& config, std::span<const ArticleSpec> corpus, ordered_json& report) {
    std::vector<Minutes> intervals = config.sweep_intervals;
    std::sort(intervals.begin(), intervals.end());
    const SweepReport grid =
        run_sweep_grid(corpus, config.sweep_methods, intervals, config.sim, config.sim.master_seed, config.threads);
    ordered_json metrics{{"grid", sweep_to_json(grid)}};
    const auto has = [&](UpdateMethod m) {
        return std::find(config.sweep_methods.begin(), config.sweep_methods.end(), m) != config.sweep_methods.end();
    };
    if (has(UpdateMethod::Summation) && has(UpdateMethod::Normalization)) {
        metrics["update_methods"] = sweep_to_json(with_method_deltas(grid));
    }
    if (has(UpdateMethod::Summation)) metrics["frequencies"] = sweep_to_json(with_frequency_gaps(grid));
    metrics["pairing"] = "every cell reuses the same master seed";
    report["metrics"] = std::move(metrics);
}

void command_stress(const ExperimentConfig& config, std::span<const ArticleSpec> corpus, ordered_json& report,
                    ArtifactWriter& out) {
    std::map<std::size_t, AdversarialPrior> calibrated;  // by arm count, favoured arm 0
    ordered_json priors = ordered_json::array();
    std::vector<MaybeMinutes> times;
    for (const auto& spec : corpus) {
        const std::size_t k = spec.arm_count();
        auto it = calibrated.find(k);
        if (it == calibrated.end()) {
            it = calibrated.emplace(k, calibrate_adversarial_prior(k, 0, config.adversarial)).first;
            ordered_json arms = ordered_json::array();
            for (const auto& a : it->second.arms) arms.push_back({a.alpha, a.beta});
            priors.push_back({{"arms", k}, {"prior", std::move(arms)}, {"favoured_share", it->second.favoured_share}});
        }
        // Others share one prior, so moving the favoured prior to the worst arm is a swap.
        std::vector<ArmPosterior> prior = it->second.arms;
        std::swap(prior[0], prior[spec.worst_arm()]);
        for (std::size_t r = 0; r < config.stress_repeats; ++r) {
            auto streams = ArticleStreams::derive(mix_seed(config.sim.master_seed, r), spec.article_id, k);
            times.push_back(self_correction_experiment(spec, prior, config.sim, std::move(streams)));
        }
    }
    std::size_t within_hour = 0;
    for (const auto& t : times) within_hour += (t && *t <= 60);
    report["metrics"] = ordered_json{
        {"calibrated_priors", std::move(priors)},
        {"runs", times.size()},
        {"self_correction",
         {{"p50_minutes", maybe_minutes(percentile(times, 0.5))},
          {"p80_minutes", maybe_minutes(percentile(times, 0.8))},
          {"share_within_60_minutes", static_cast<double>(within_hour) / static_cast<double>(times.size())},
          {"not_achieved", std::count(times.begin(), times.end(), std::nullopt)},
          {"streak_batches", kSelfCorrectionStreak}}}};
    out.write("self_correction.csv", histogram_csv(histogram(times, 5, 70)));
}

}  // namespace

CorpusParams parse_synthetic_spec(std::string_view spec) {
    CorpusParams p;
    if (spec.empty()) return p;
    for (const auto item : split(spec, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("synthetic: expected key=value, got '" + std::string(item) + "'");
        }
        const std::string key(item.substr(0, eq));
        const std::string_view value = item.substr(eq + 1);
        const std::string field = "synthetic." + key;
        if (key == "articles") {
            p.article_count = parse_number<std::size_t>(value, field);
        } else if (key == "arms") {
            std::tie(p.min_arms, p.max_arms) = parse_range<std::size_t>(value, field);
        } else if (key == "theta") {
            std::tie(p.theta_min, p.theta_max) = parse_range<double>(value, field);
        } else if (key == "gap") {
            p.min_relative_gap = parse_number<double>(value, field);
        } else if (key == "impressions") {
            std::tie(p.min_impressions, p.max_impressions) = parse_range<std::int64_t>(value, field);
        } else if (key == "share") {
            p.first_hour_share = parse_number<double>(value, field);
        } else if (key == "jitter") {
            p.share_jitter = parse_number<double>(value, field);
        } else if (key == "minutes") {
            p.trace_minutes = parse_number<Minutes>(value, field);
        } else {
            throw ConfigError("synthetic: unknown key '" + key + "'");
        }
    }
    p.validate();
    return p;
}

std::vector<Minutes> parse_interval_list(std::string_view text) {
    std::vector<Minutes> out;
    for (const auto part : split(text, ',')) {
        const auto v = parse_number<Minutes>(part, "sweep-intervals");
        if (v < 1) throw ConfigError("sweep-intervals: intervals must be at least 1 minute");
        out.push_back(v);
    }
    return out;
}

void ExperimentConfig::validate() const {
    if (corpus_path.has_value() == synthetic.has_value()) {
        throw ConfigError("corpus: give exactly one of --corpus or --synthetic");
    }
    if (synthetic) synthetic->validate();
    sim.validate();
    if (command == Command::Sweep) {
        if (sweep_methods.empty()) throw ConfigError("sweep: no update methods");
        if (sweep_intervals.empty()) throw ConfigError("sweep-intervals: empty");
        for (const auto i : sweep_intervals) {
            if (i < 1 || i > sim.horizon) {
                throw ConfigError("sweep-intervals: " + std::to_string(i) + " is outside [1, horizon]");
            }
        }
    }
    if (stable_window == 0) throw ConfigError("window: must be positive");
    if (bootstrap_resamples == 0) throw ConfigError("bootstrap: must be positive");
    if (stress_repeats == 0) throw ConfigError("stress-repeats: must be positive");
    if (threads == 0) throw ConfigError("threads: must be positive");
    if (out_dir.empty()) throw ConfigError("out: empty output directory");
}

ordered_json ExperimentConfig::to_json() const {
    ordered_json methods = ordered_json::array();
    for (const auto m : sweep_methods) methods.push_back(to_string(m));
    ordered_json j{{"command", to_string(command)}};
    if (corpus_path) j["corpus"] = corpus_path->string();
    if (synthetic) j["synthetic"] = corpus_params_to_json(*synthetic);
    j["sim"] = sim_to_json(sim);
    j["sweep_methods"] = std::move(methods);
    j["sweep_intervals"] = sweep_intervals;
    j["stable_window"] = stable_window;
    j["bootstrap_resamples"] = bootstrap_resamples;
    j["stress_repeats"] = stress_repeats;
    j["adversarial"] = {{"target_share", adversarial.target_share},
                        {"tolerance", adversarial.tolerance},
                        {"strength", adversarial.strength},
                        {"other_mean", adversarial.other_mean},
                        {"draws", adversarial.draws},
                        {"seed", adversarial.seed}};
    return j;
}

std::vector<ArticleSpec> load_corpus(const ExperimentConfig& config, std::vector<std::string>* warnings) {
    if (config.corpus_path) return parse_corpus(*config.corpus_path, warnings);
    if (config.synthetic) return generate_synthetic_corpus(*config.synthetic, config.sim.master_seed);
    throw ConfigError("corpus: give exactly one of --corpus or --synthetic");
}

ExperimentOutcome run_experiment(const ExperimentConfig& config) {
    config.validate();
    std::vector<std::string> warnings;
    const auto corpus = load_corpus(config, &warnings);
    if (corpus.empty() && config.command != Command::Generate) {
        throw InputError("corpus: corpus is empty, no metric is defined");
    }
    ArtifactWriter out(config.out_dir);

    ordered_json report;
    report["command"] = to_string(config.command);
    report["generated_at"] = utc_timestamp();
    report["code_version"] = code_version();
    report["config"] = config.to_json();
    report["corpus"] = summarize_corpus(config, corpus);
    report["warnings"] = warnings;

    switch (config.command) {
        case Command::Run: command_run(config, corpus, report, out); break;
        case Command::BaselineCompare: command_baseline_compare(config, corpus, report); break;
        case Command::Sweep: command_sweep(config, corpus, report); break;
        case Command::Stress: command_stress(config, corpus, report, out); break;
        case Command::Generate: {
            std::ostringstream jsonl;
            write_corpus(jsonl, corpus);
            out.write("corpus.jsonl", jsonl.str());
            break;
        }
    }
    out.write("report.json", report.dump(2) + "\n");

    ordered_json artifacts = ordered_json::array();
    for (const auto& p : out.written()) artifacts.push_back(p.filename().string());
    ordered_json manifest{{"code_version", code_version()},
                          {"command", to_string(config.command)},
                          {"argv", config.argv},
                          {"seed", config.sim.master_seed},
                          {"config", config.to_json()},
                          {"corpus_digest", report["corpus"]["digest"]},
                          {"artifacts", std::move(artifacts)}};
    out.write("manifest.json", manifest.dump(2) + "\n");
    return ExperimentOutcome{std::move(report), out.written()};
}

}  // namespace bts
