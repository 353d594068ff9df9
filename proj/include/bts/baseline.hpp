#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bts/traffic.hpp"

namespace bts {

/// Outcome of the test-rollout strategy for one article: an exact equal
/// split over the testing period, then every post-testing impression goes to
/// the arm with the most testing clicks.
struct BaselineResult {
    std::string article_id;
    std::vector<std::int64_t> testing_impressions;  // per arm
    std::vector<std::int64_t> testing_clicks;       // C_k^testing
    std::size_t winner = 0;                         // k*
    std::int64_t post_clicks = 0;                   // C_{k*}^post
    std::int64_t test_impressions = 0;              // M^test
    std::int64_t post_impressions = 0;              // M^post

    std::int64_t total_testing_clicks() const noexcept;
    /// C^baseline = sum_k C_k^testing + C_{k*}^post.
    std::int64_t total_clicks() const noexcept { return total_testing_clicks() + post_clicks; }
};

/// Splits n impressions over K arms: floor(n / K) each, remainder handed
/// out one at a time from arm 0.
std::vector<std::int64_t> equal_split(std::int64_t n, std::size_t arm_count);

/// Simulates the baseline. Binomial(n, theta_k) clicks are read off arm k's
/// response tape, so the draws pair with a bTS run on the same streams; the
/// winner's post-testing clicks continue on its tape.
BaselineResult run_test_rollout(const ArticleSpec& article, const SimConfig& config, ArticleStreams streams);
BaselineResult run_test_rollout(const ArticleSpec& article, const SimConfig& config);

std::vector<BaselineResult> run_baseline_corpus(std::span<const ArticleSpec> corpus, const SimConfig& config,
                                                unsigned threads = 1);

}  // namespace bts
