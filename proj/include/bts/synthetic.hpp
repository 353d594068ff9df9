#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "bts/traffic.hpp"

namespace bts {

/// Knobs for the synthetic stand-in corpus.
///
/// Each article's traffic follows an exponentially decaying minute curve
/// whose rate is set so that `first_hour_share` of the impressions land in
/// the first 60 minutes (jittered per article by +/- `share_jitter`,
/// relative). Per-minute counts are stochastically rounded, which keeps the
/// long right tail sparse. Arm probabilities are drawn uniformly from
/// [theta_min, theta_max]; with `min_relative_gap` > 0 every non-optimal arm
/// satisfies theta_k <= (1 - gap) * theta_best.
struct CorpusParams {
    std::size_t article_count = 100;
    std::size_t min_arms = 2;
    std::size_t max_arms = 4;
    double theta_min = 0.02;
    double theta_max = 0.08;
    double min_relative_gap = 0.0;
    /// Total impressions per article, log-uniform in [min, max].
    std::int64_t min_impressions = 50'000;
    std::int64_t max_impressions = 200'000;
    double first_hour_share = 0.24;
    double share_jitter = 0.25;
    Minutes trace_minutes = 4320;

    /// Throws ConfigError naming the offending field.
    void validate() const;
};

/// Deterministic for a given (params, seed). Article i depends only on
/// (seed, i), so growing article_count keeps the earlier articles intact.
std::vector<ArticleSpec> generate_synthetic_corpus(const CorpusParams& params, std::uint64_t seed);

/// Decay rate (per minute) of an exponential curve that puts `share` of its
/// mass into the first `window` minutes.
double decay_rate_for_share(double share, Minutes window = 60);

}  // namespace bts
