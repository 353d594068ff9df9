#include "bts/traffic.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>

#include "bts/errors.hpp"

namespace bts {

ImpressionTrace::ImpressionTrace(std::vector<TraceEntry> entries) : entries_(std::move(entries)) {
    Minutes previous = -1;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const auto& e = entries_[i];
        if (e.minute < 0) {
            throw DataError("trace[" + std::to_string(i) + "]: negative minute offset", 0,
                            "trace[" + std::to_string(i) + "]");
        }
        if (e.minute <= previous) {
            throw DataError("trace[" + std::to_string(i) + "]: minute offsets must be strictly increasing",
                            0, "trace[" + std::to_string(i) + "]");
        }
        if (e.impressions < 0) {
            throw DataError("trace[" + std::to_string(i) + "]: negative impressions", 0,
                            "trace[" + std::to_string(i) + "]");
        }
        previous = e.minute;
        total_ += e.impressions;
    }
}

std::int64_t ImpressionTrace::impressions_between(Minutes begin, Minutes end) const noexcept {
    auto first = std::lower_bound(entries_.begin(), entries_.end(), begin,
                                  [](const TraceEntry& e, Minutes m) { return e.minute < m; });
    std::int64_t sum = 0;
    for (auto it = first; it != entries_.end() && it->minute < end; ++it) sum += it->impressions;
    return sum;
}

std::size_t ArticleSpec::optimal_arm() const noexcept {
    std::size_t best = 0;
    for (std::size_t k = 1; k < theta_hat.size(); ++k) {
        if (theta_hat[k] > theta_hat[best]) best = k;
    }
    return best;
}

std::size_t ArticleSpec::worst_arm() const noexcept {
    std::size_t worst = 0;
    for (std::size_t k = 1; k < theta_hat.size(); ++k) {
        if (theta_hat[k] <= theta_hat[worst]) worst = k;
    }
    return worst;
}

void ArticleSpec::validate() const {
    if (theta_hat.size() < 2) {
        throw DataError("theta_hat: need at least 2 arms, got " + std::to_string(theta_hat.size()), 0,
                        "theta_hat");
    }
    for (std::size_t k = 0; k < theta_hat.size(); ++k) {
        const double t = theta_hat[k];
        if (!(t >= 0.0 && t <= 1.0)) {
            const std::string field = "theta_hat[" + std::to_string(k) + "]";
            throw DataError(field + ": " + std::to_string(t) + " is outside [0, 1]", 0, field);
        }
    }
    if (trace.total() <= 0) {
        throw DataError("trace: article has no impressions", 0, "trace");
    }
}

void SimConfig::validate() const {
    if (update_interval < 1) {
        throw ConfigError("interval: must be at least 1 minute, got " + std::to_string(update_interval));
    }
    if (horizon < update_interval) {
        throw ConfigError("horizon: " + std::to_string(horizon) + " minutes is shorter than the " +
                          std::to_string(update_interval) + "-minute update interval");
    }
    if (testing_minutes < 1) {
        throw ConfigError("testing_minutes: must be at least 1, got " + std::to_string(testing_minutes));
    }
}

std::vector<Batch> build_batches(const ImpressionTrace& trace, const SimConfig& config) {
    config.validate();
    std::vector<Batch> batches;
    batches.reserve(static_cast<std::size_t>((config.horizon + config.update_interval - 1) /
                                             config.update_interval));
    std::int64_t index = 1;
    for (Minutes start = 0; start < config.horizon; start += config.update_interval, ++index) {
        const Minutes end = std::min(start + config.update_interval, config.horizon);
        batches.push_back(Batch{index, trace.impressions_between(start, end), start, end});
    }
    return batches;
}

Minutes active_lifespan(const ImpressionTrace& trace) {
    const std::int64_t total = trace.total();
    if (total <= 0) throw InputError("active_lifespan: trace has no impressions");
    std::int64_t cumulative = 0;
    for (const auto& e : trace.entries()) {
        cumulative += e.impressions;
        // cumulative >= 0.95 * total, in integers
        if (20 * cumulative >= 19 * total) return e.minute;
    }
    return trace.entries().back().minute;
}

ArticleStreams ArticleStreams::derive(std::uint64_t master_seed, std::string_view article_id,
                                      std::size_t arm_count) {
    const std::uint64_t article_seed = mix_seed(master_seed, hash_id(article_id));
    ArticleStreams streams{Engine(mix_seed(article_seed, 0)), {}};
    streams.responses.reserve(arm_count);
    for (std::size_t k = 0; k < arm_count; ++k) {
        streams.responses.emplace_back(mix_seed(article_seed, k + 1));
    }
    return streams;
}

std::int64_t ArticleResult::total_impressions() const noexcept {
    return std::accumulate(impressions.begin(), impressions.end(), std::int64_t{0});
}

std::int64_t ArticleResult::total_clicks() const noexcept {
    return std::accumulate(clicks.begin(), clicks.end(), std::int64_t{0});
}

std::int64_t ArticleResult::total_first_hour_clicks() const noexcept {
    return std::accumulate(first_hour_clicks.begin(), first_hour_clicks.end(), std::int64_t{0});
}

BatchedRun::BatchedRun(const ArticleSpec& article, const SimConfig& config, ArticleStreams streams,
                       BanditState initial)
    : article_(&article),
      config_(config),
      streams_(std::move(streams)),
      state_(std::move(initial)),
      batches_(build_batches(article.trace, config)),
      counters_(article.arm_count()) {
    article.validate();
    const std::size_t k = article.arm_count();
    if (state_.arm_count() != k) {
        throw InputError("initial state has " + std::to_string(state_.arm_count()) +
                         " arms, article has " + std::to_string(k));
    }
    if (streams_.responses.size() != k) {
        throw InputError("streams carry " + std::to_string(streams_.responses.size()) +
                         " response tapes for " + std::to_string(k) + " arms");
    }
    result_.article_id = article.article_id;
    result_.batches.reserve(batches_.size());
    result_.impressions.assign(k, 0);
    result_.clicks.assign(k, 0);
    result_.first_hour_impressions.assign(k, 0);
    result_.first_hour_clicks.assign(k, 0);
}

const BatchRecord& BatchedRun::step() {
    if (done()) throw InputError("BatchedRun::step: no batches left");
    const Batch& batch = batches_[next_batch_++];
    const auto entries = article_->trace.entries();
    const auto& theta = article_->theta_hat;
    const std::size_t k_arms = theta.size();

    counters_.reset();
    std::vector<std::int64_t> first_hour_shown(k_arms, 0);
    std::vector<std::int64_t> first_hour_clicked(k_arms, 0);
    while (cursor_ < entries.size() && entries[cursor_].minute < batch.end_minute) {
        const TraceEntry& entry = entries[cursor_++];
        const bool first_hour = entry.minute < config_.testing_minutes;
        for (std::int64_t i = 0; i < entry.impressions; ++i) {
            const std::size_t arm = sample_arm(state_, streams_.selection);
            const bool reward = simulate_response(theta[arm], streams_.responses[arm]);
            counters_.record(arm, reward);
            if (first_hour) {
                ++first_hour_shown[arm];
                if (reward) ++first_hour_clicked[arm];
            }
        }
    }

    if (counters_.events() > 0) {
        state_ = apply_update(state_, counters_, config_.update_method);
    }

    BatchRecord record{batch, std::vector<std::int64_t>(k_arms), std::vector<std::int64_t>(k_arms),
                       std::vector<ArmPosterior>(state_.arms().begin(), state_.arms().end())};
    for (std::size_t k = 0; k < k_arms; ++k) {
        record.impressions[k] = counters_.impressions(k);
        record.clicks[k] = counters_.successes()[k];
        result_.impressions[k] += record.impressions[k];
        result_.clicks[k] += record.clicks[k];
        result_.first_hour_impressions[k] += first_hour_shown[k];
        result_.first_hour_clicks[k] += first_hour_clicked[k];
    }
    result_.batches.push_back(std::move(record));
    return result_.batches.back();
}

ArticleResult BatchedRun::finish() && {
    while (!done()) step();
    result_.post_horizon_impressions =
        article_->trace.total() - article_->trace.impressions_between(0, config_.horizon);
    return std::move(result_);
}

ArticleResult run_article(const ArticleSpec& article, const SimConfig& config, ArticleStreams streams,
                          BanditState initial) {
    return BatchedRun(article, config, std::move(streams), std::move(initial)).finish();
}

ArticleResult run_article(const ArticleSpec& article, const SimConfig& config, ArticleStreams streams) {
    return run_article(article, config, std::move(streams), init_arms(article.arm_count()));
}

ArticleResult run_article(const ArticleSpec& article, const SimConfig& config) {
    return run_article(article, config,
                       ArticleStreams::derive(config.master_seed, article.article_id, article.arm_count()));
}

std::vector<std::string> invariant_violations(const ArticleResult& result, const ArticleSpec& article,
                                              const SimConfig& config) {
    std::vector<std::string> out;
    const std::string prefix = result.article_id + ": ";
    const std::size_t k_arms = article.arm_count();
    std::vector<std::int64_t> impressions(k_arms, 0);
    std::vector<std::int64_t> clicks(k_arms, 0);
    for (const auto& rec : result.batches) {
        std::int64_t shown = 0;
        for (std::size_t k = 0; k < k_arms; ++k) {
            if (rec.clicks[k] > rec.impressions[k]) {
                out.push_back(prefix + "batch " + std::to_string(rec.batch.index) + " arm " +
                              std::to_string(k) + " has more clicks than impressions");
            }
            shown += rec.impressions[k];
            impressions[k] += rec.impressions[k];
            clicks[k] += rec.clicks[k];
        }
        if (shown != rec.batch.size) {
            out.push_back(prefix + "batch " + std::to_string(rec.batch.index) + " allocated " +
                          std::to_string(shown) + " of " + std::to_string(rec.batch.size) + " impressions");
        }
    }
    if (impressions != result.impressions || clicks != result.clicks) {
        out.push_back(prefix + "per-arm totals differ from the sum over batches");
    }
    const std::int64_t in_horizon = article.trace.impressions_between(0, config.horizon);
    if (result.total_impressions() != in_horizon) {
        out.push_back(prefix + "simulated " + std::to_string(result.total_impressions()) +
                      " impressions, trace has " + std::to_string(in_horizon) + " within the horizon");
    }
    if (result.total_impressions() + result.post_horizon_impressions != article.trace.total()) {
        out.push_back(prefix + "in-horizon plus post-horizon traffic does not match the trace total");
    }
    return out;
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    {
        std::vector<std::jthread> workers;
        const unsigned count = std::min<std::size_t>(threads, n);
        for (unsigned t = 0; t < count; ++t) {
            workers.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        std::lock_guard lock(error_mutex);
                        if (!error) error = std::current_exception();
                        next = n;
                    }
                }
            });
        }
    }
    if (error) std::rethrow_exception(error);
}

std::vector<ArticleResult> run_corpus(std::span<const ArticleSpec> corpus, const SimConfig& config,
                                      unsigned threads) {
    std::vector<ArticleResult> results(corpus.size());
    parallel_for(corpus.size(), threads, [&](std::size_t i) { results[i] = run_article(corpus[i], config); });
    return results;
}

}  // namespace bts
