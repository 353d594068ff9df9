#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bts/baseline.hpp"
#include "bts/traffic.hpp"

namespace bts {

/// A metric that may never be reached (time to optimize, self-correction).
using MaybeMinutes = std::optional<Minutes>;

inline constexpr std::size_t kDefaultStableWindow = 12;
inline constexpr std::size_t kSelfCorrectionStreak = 5;

/// Arm with strictly more impressions than every other arm; nullopt on a tie
/// for first or when nothing was shown.
std::optional<std::size_t> strict_plurality(std::span<const std::int64_t> impressions);

// ---------------------------------------------------------------------------
// Convergence and speed
// ---------------------------------------------------------------------------

struct ConvergenceVerdict {
    bool converged_correctly = false;
    std::int64_t stable_window_start = 0;  // batch index, 0 if no traffic
    std::optional<std::size_t> plurality_arm;
    std::size_t optimal_arm = 0;
};

/// The stable window is the last `window` batches that carried traffic;
/// impressions are pooled over the window and the article converged
/// correctly when the optimal arm holds the strict plurality.
ConvergenceVerdict convergence_verdict(const ArticleResult& result, const ArticleSpec& spec,
                                       std::size_t window = kDefaultStableWindow);

/// Throws InputError on empty or misaligned input.
double false_convergence_rate(std::span<const ArticleResult> results, std::span<const ArticleSpec> specs,
                              std::size_t window = kDefaultStableWindow);

/// End minute of the earliest batch b from which the optimal arm holds the
/// strict in-batch plurality in every later batch with traffic. With
/// `hold_batches` set, only the next hold_batches non-empty batches (from b)
/// must agree. Batches without traffic neither confirm nor break a run.
MaybeMinutes time_to_optimize(const ArticleResult& result, const ArticleSpec& spec,
                              std::optional<std::size_t> hold_batches = std::nullopt);

// ---------------------------------------------------------------------------
// Self-correction stress test
// ---------------------------------------------------------------------------

struct AdversarialPriorOptions {
    double target_share = 0.90;
    double tolerance = 0.02;
    /// Pseudo-count alpha + beta for every arm.
    double strength = 200.0;
    /// Prior mean of the non-favoured arms.
    double other_mean = 0.02;
    std::size_t draws = 20'000;
    std::uint64_t seed = 0x5eed;
};

struct AdversarialPrior {
    std::vector<ArmPosterior> arms;
    std::size_t favoured_arm = 0;
    /// Monte Carlo estimate of the favoured arm's first-batch traffic share.
    double favoured_share = 0.0;
};

/// Probability that `arm` wins sample_arm under `state`, by Monte Carlo.
double selection_share(const BanditState& state, std::size_t arm, std::size_t draws, Engine& rng);

/// Bisects the favoured arm's prior mean (at fixed strength, other arms
/// identical) until its expected share is within tolerance of the target.
/// Throws ConfigError when the target cannot be met.
AdversarialPrior calibrate_adversarial_prior(std::size_t arm_count, std::size_t favoured_arm,
                                             const AdversarialPriorOptions& options = {});

/// Runs bTS from `prior` and returns the end minute of the batch at which the
/// optimal arm has held the strictly highest posterior mean for `streak`
/// consecutive batch boundaries. Not reached when several arms share the
/// highest theta_hat.
MaybeMinutes self_correction_experiment(const ArticleSpec& spec, std::span<const ArmPosterior> prior,
                                        const SimConfig& config, ArticleStreams streams,
                                        std::size_t streak = kSelfCorrectionStreak);

// ---------------------------------------------------------------------------
// Click gain and sub-optimal exposure
// ---------------------------------------------------------------------------

struct ClickSplit {
    std::int64_t first_hour = 0;
    std::int64_t remaining = 0;

    std::int64_t total() const noexcept { return first_hour + remaining; }
    ClickSplit& operator+=(const ClickSplit& o) noexcept {
        first_hour += o.first_hour;
        remaining += o.remaining;
        return *this;
    }
};

ClickSplit click_split(const ArticleResult& result);
ClickSplit click_split(const BaselineResult& result);

/// Fractional gains (treatment - reference) / reference per period. A
/// period whose reference is 0 yields NaN.
struct GainReport {
    double first_hour = 0.0;
    double remaining = 0.0;
    double total = 0.0;
    ClickSplit treatment;
    ClickSplit reference;
};

GainReport relative_gain(const ClickSplit& treatment, const ClickSplit& reference);

/// Corpus-level gain of bTS over the baseline, pooled over articles.
/// Throws InputError when the two lists are empty or not aligned by id.
GainReport click_gain(std::span<const ArticleResult> bts, std::span<const BaselineResult> base);

enum class GainPeriod { FirstHour, Remaining, Total };

struct ConfidenceInterval {
    double lower = 0.0;
    double upper = 0.0;
    double level = 0.95;
};

/// Percentile bootstrap over articles for one period's pooled gain.
ConfidenceInterval bootstrap_gain(std::span<const ArticleResult> bts, std::span<const BaselineResult> base,
                                  GainPeriod period, std::size_t resamples, std::uint64_t seed,
                                  double level = 0.95);

struct SuboptimalReport {
    std::int64_t bts = 0;
    std::int64_t baseline = 0;
    /// 1 - bts / baseline.
    double decrease = 0.0;
};

/// Baseline sub-optimal traffic counts only the testing period (the
/// baseline's best case). Throws InputError when that count is 0.
SuboptimalReport suboptimal_impressions(std::span<const ArticleResult> bts, std::span<const BaselineResult> base,
                                        std::span<const ArticleSpec> specs);

// ---------------------------------------------------------------------------
// Tuning sweeps
// ---------------------------------------------------------------------------

struct SweepCell {
    UpdateMethod method = UpdateMethod::Summation;
    Minutes interval = 5;
    std::int64_t total_clicks = 0;
    /// Relative difference against the report's reference cell(s).
    double delta = 0.0;
};

struct SweepReport {
    std::string reference;
    std::vector<SweepCell> cells;

    /// Throws InputError when the cell is absent.
    const SweepCell& at(UpdateMethod method, Minutes interval) const;
};

/// Total corpus clicks for every (method, interval) cell; deltas left at 0.
SweepReport run_sweep_grid(std::span<const ArticleSpec> corpus, std::span<const UpdateMethod> methods,
                           std::span<const Minutes> intervals, SimConfig config, std::uint64_t seed,
                           unsigned threads = 1);

/// Fills summation-cell deltas as summation / normalization - 1 at the same
/// interval; cells without a normalization partner keep delta 0.
SweepReport with_method_deltas(SweepReport grid);

/// Keeps the summation cells and sets each delta to the gap from the best one.
SweepReport with_frequency_gaps(const SweepReport& grid);

/// Summation vs normalization per interval; each summation cell's delta is
/// summation / normalization - 1 (normalization cells are the reference).
SweepReport compare_update_methods(std::span<const ArticleSpec> corpus, std::span<const Minutes> intervals,
                                   SimConfig config, std::uint64_t seed, unsigned threads = 1);

/// Summation update at every interval; delta is the gap to the best cell.
/// Throws InputError unless intervals are non-empty and ascending.
SweepReport compare_frequencies(std::span<const ArticleSpec> corpus, std::span<const Minutes> intervals,
                                SimConfig config, std::uint64_t seed, unsigned threads = 1);

/// One-sided sign test: P(X >= wins) for X ~ Binomial(wins + losses, 1/2).
double sign_test_p_value(std::size_t wins, std::size_t losses);

// ---------------------------------------------------------------------------
// Summaries
// ---------------------------------------------------------------------------

/// Nearest-rank percentile (q in (0, 1]); unreached values rank above every
/// reached one, and nullopt is returned when the rank lands on one.
MaybeMinutes percentile(std::span<const MaybeMinutes> values, double q);

struct HistogramBin {
    Minutes start = 0;
    std::int64_t count = 0;
};

/// Bins [0, w), [w, 2w), ... up to overflow_start, plus one last bin
/// starting at overflow_start that also holds unreached values.
std::vector<HistogramBin> histogram(std::span<const MaybeMinutes> values, Minutes bin_width,
                                    Minutes overflow_start);

/// "bin_start_minutes,count" CSV, one row per bin.
std::string histogram_csv(std::span<const HistogramBin> bins);

}  // namespace bts
