#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "bts/evaluation.hpp"
#include "bts/synthetic.hpp"
#include "bts/traffic.hpp"

namespace bts {

enum class Command { Run, Sweep, Stress, BaselineCompare, Generate };

std::string_view to_string(Command command) noexcept;

/// Parses "key=value,key=value" into CorpusParams. Keys: articles, arms
/// (N or MIN:MAX), theta (LO:HI), gap, impressions (N or MIN:MAX), share,
/// jitter, minutes. Unknown keys and malformed values throw ConfigError.
CorpusParams parse_synthetic_spec(std::string_view spec);

/// Parses "1,3,5" into minutes. Throws ConfigError.
std::vector<Minutes> parse_interval_list(std::string_view text);

struct ExperimentConfig {
    Command command = Command::Run;
    std::optional<std::filesystem::path> corpus_path;
    std::optional<CorpusParams> synthetic;
    SimConfig sim;
    std::vector<UpdateMethod> sweep_methods{UpdateMethod::Summation, UpdateMethod::Normalization};
    std::vector<Minutes> sweep_intervals{1, 3, 5, 10, 30, 60};
    std::size_t stable_window = kDefaultStableWindow;
    std::size_t bootstrap_resamples = 2000;
    std::size_t stress_repeats = 1;
    AdversarialPriorOptions adversarial;
    unsigned threads = 1;
    std::filesystem::path out_dir = "bts_out";
    /// Command line as invoked, recorded in the manifest.
    std::vector<std::string> argv;

    /// Throws ConfigError naming the offending field.
    void validate() const;
    nlohmann::ordered_json to_json() const;
};

struct ExperimentOutcome {
    nlohmann::ordered_json report;
    std::vector<std::filesystem::path> artifacts;
};

/// Loads or generates the corpus named by the config.
std::vector<ArticleSpec> load_corpus(const ExperimentConfig& config, std::vector<std::string>* warnings = nullptr);

/// Runs the configured command and writes report.json, manifest.json and any
/// CSV/JSONL artifacts into out_dir. Everything except the report's
/// "generated_at" field is a pure function of the config.
ExperimentOutcome run_experiment(const ExperimentConfig& config);

/// Identifier of the source tree the binary was built from.
std::string_view code_version() noexcept;

}  // namespace bts
