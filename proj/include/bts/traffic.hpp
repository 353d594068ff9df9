#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bts/bandit.hpp"
#include "bts/rng.hpp"

namespace bts {

/// Minutes since publish. Plain integer; the simulation clock has
/// one-minute resolution.
using Minutes = std::int64_t;

struct TraceEntry {
    Minutes minute = 0;
    std::int64_t impressions = 0;

    friend bool operator==(const TraceEntry&, const TraceEntry&) = default;
};

/// Minute-resolution impression counts for one article, sparse in minutes.
class ImpressionTrace {
public:
    ImpressionTrace() = default;
    /// Throws DataError when minutes are negative or not strictly increasing,
    /// or when any count is negative.
    explicit ImpressionTrace(std::vector<TraceEntry> entries);

    std::span<const TraceEntry> entries() const noexcept { return entries_; }
    bool empty() const noexcept { return entries_.empty(); }
    std::int64_t total() const noexcept { return total_; }

    /// Impressions in minutes [begin, end).
    std::int64_t impressions_between(Minutes begin, Minutes end) const noexcept;

    friend bool operator==(const ImpressionTrace&, const ImpressionTrace&) = default;

private:
    std::vector<TraceEntry> entries_;
    std::int64_t total_ = 0;
};

/// One simulation unit: K arms with estimated click probabilities and the
/// article's traffic.
struct ArticleSpec {
    std::string article_id;
    std::vector<double> theta_hat;
    ImpressionTrace trace;

    std::size_t arm_count() const noexcept { return theta_hat.size(); }
    /// argmax of theta_hat, lowest index on ties.
    std::size_t optimal_arm() const noexcept;
    /// argmin of theta_hat, highest index on ties.
    std::size_t worst_arm() const noexcept;

    /// Throws DataError naming the field (K >= 2, theta_hat in [0, 1],
    /// positive total traffic).
    void validate() const;
};

struct Batch {
    std::int64_t index = 1;  // 1-based
    std::int64_t size = 0;
    Minutes start_minute = 0;
    Minutes end_minute = 0;  // exclusive

    friend bool operator==(const Batch&, const Batch&) = default;
};

struct SimConfig {
    Minutes update_interval = 5;
    Minutes horizon = 2880;
    UpdateMethod update_method = UpdateMethod::Summation;
    std::uint64_t master_seed = 0;
    /// Length of the first-hour / testing period.
    Minutes testing_minutes = 60;

    /// Throws ConfigError.
    void validate() const;
};

/// Consecutive update_interval windows covering [0, horizon). The last
/// window is truncated at the horizon; traffic at or past the horizon is
/// dropped.
std::vector<Batch> build_batches(const ImpressionTrace& trace, const SimConfig& config);

/// Bernoulli(theta) from one uniform draw.
inline bool simulate_response(double theta, Engine& rng) noexcept {
    return uniform01(rng) < theta;
}

/// Smallest minute m with cumulative impressions through m >= 95% of the
/// trace total. Throws InputError on a trace without traffic.
Minutes active_lifespan(const ImpressionTrace& trace);

/// Random streams for one article. Arm selection draws from `selection`;
/// arm k's simulated responses come from `responses[k]`, so the n-th
/// display of arm k sees the same uniform regardless of policy. The
/// baseline reuses the same per-arm tapes.
struct ArticleStreams {
    Engine selection;
    std::vector<Engine> responses;

    static ArticleStreams derive(std::uint64_t master_seed, std::string_view article_id,
                                 std::size_t arm_count);
};

struct BatchRecord {
    Batch batch;
    std::vector<std::int64_t> impressions;
    std::vector<std::int64_t> clicks;
    /// Posterior after this batch's update.
    std::vector<ArmPosterior> posterior;
};

struct ArticleResult {
    std::string article_id;
    std::vector<BatchRecord> batches;
    std::vector<std::int64_t> impressions;  // per arm, in horizon
    std::vector<std::int64_t> clicks;
    std::vector<std::int64_t> first_hour_impressions;
    std::vector<std::int64_t> first_hour_clicks;
    std::int64_t post_horizon_impressions = 0;

    std::int64_t total_impressions() const noexcept;
    std::int64_t total_clicks() const noexcept;
    std::int64_t total_first_hour_clicks() const noexcept;
};

/// Steps the batched Thompson sampling loop one batch at a time. Posteriors
/// are frozen for the whole batch and updated only at its end.
class BatchedRun {
public:
    BatchedRun(const ArticleSpec& article, const SimConfig& config, ArticleStreams streams,
               BanditState initial);

    bool done() const noexcept { return next_batch_ >= batches_.size(); }
    /// Processes the next batch and returns its record (owned by the run).
    const BatchRecord& step();
    const BanditState& state() const noexcept { return state_; }
    std::span<const Batch> batches() const noexcept { return batches_; }

    /// Runs any remaining batches and hands over the accumulated result.
    ArticleResult finish() &&;

private:
    const ArticleSpec* article_;
    SimConfig config_;
    ArticleStreams streams_;
    BanditState state_;
    std::vector<Batch> batches_;
    std::size_t next_batch_ = 0;
    std::size_t cursor_ = 0;  // into the trace entries
    BatchCounters counters_;
    ArticleResult result_;
};

ArticleResult run_article(const ArticleSpec& article, const SimConfig& config, ArticleStreams streams);
ArticleResult run_article(const ArticleSpec& article, const SimConfig& config, ArticleStreams streams,
                          BanditState initial);
/// Streams derived from config.master_seed and the article id.
ArticleResult run_article(const ArticleSpec& article, const SimConfig& config);

/// Conservation and click-bound checks; returns a description of each
/// violation (empty when the result is consistent).
std::vector<std::string> invariant_violations(const ArticleResult& result, const ArticleSpec& article,
                                              const SimConfig& config);

/// Runs every article, optionally across worker threads. Output order
/// matches input order and does not depend on the thread count.
std::vector<ArticleResult> run_corpus(std::span<const ArticleSpec> corpus, const SimConfig& config,
                                      unsigned threads = 1);

/// Calls fn(i) for i in [0, n) over `threads` workers.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace bts
