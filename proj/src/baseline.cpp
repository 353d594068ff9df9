#include "bts/baseline.hpp"

#include <algorithm>
#include <numeric>

#include "bts/errors.hpp"

namespace bts {

std::int64_t BaselineResult::total_testing_clicks() const noexcept {
    return std::accumulate(testing_clicks.begin(), testing_clicks.end(), std::int64_t{0});
}

std::vector<std::int64_t> equal_split(std::int64_t n, std::size_t arm_count) {
    if (arm_count == 0) throw InputError("equal_split: zero arms");
    const auto k = static_cast<std::int64_t>(arm_count);
    std::vector<std::int64_t> split(arm_count, n / k);
    for (std::int64_t r = 0; r < n % k; ++r) ++split[static_cast<std::size_t>(r)];
    return split;
}

namespace {

std::int64_t binomial_from_tape(std::int64_t n, double theta, Engine& tape) {
    std::int64_t clicks = 0;
    for (std::int64_t i = 0; i < n; ++i) {
        if (simulate_response(theta, tape)) ++clicks;
    }
    return clicks;
}

}  // namespace

BaselineResult run_test_rollout(const ArticleSpec& article, const SimConfig& config, ArticleStreams streams) {
    config.validate();
    article.validate();
    const std::size_t k_arms = article.arm_count();
    if (streams.responses.size() != k_arms) {
        throw InputError("streams carry " + std::to_string(streams.responses.size()) +
                         " response tapes for " + std::to_string(k_arms) + " arms");
    }
    const Minutes testing_end = std::min(config.testing_minutes, config.horizon);

    BaselineResult out;
    out.article_id = article.article_id;
    out.test_impressions = article.trace.impressions_between(0, testing_end);
    out.post_impressions = article.trace.impressions_between(testing_end, config.horizon);
    out.testing_impressions = equal_split(out.test_impressions, k_arms);
    out.testing_clicks.resize(k_arms);
    for (std::size_t k = 0; k < k_arms; ++k) {
        out.testing_clicks[k] =
            binomial_from_tape(out.testing_impressions[k], article.theta_hat[k], streams.responses[k]);
    }
    // max_element returns the first maximum: ties go to the lowest index.
    out.winner = static_cast<std::size_t>(
        std::max_element(out.testing_clicks.begin(), out.testing_clicks.end()) - out.testing_clicks.begin());
    out.post_clicks = binomial_from_tape(out.post_impressions, article.theta_hat[out.winner],
                                         streams.responses[out.winner]);
    return out;
}

BaselineResult run_test_rollout(const ArticleSpec& article, const SimConfig& config) {
    return run_test_rollout(article, config,
                            ArticleStreams::derive(config.master_seed, article.article_id, article.arm_count()));
}

std::vector<BaselineResult> run_baseline_corpus(std::span<const ArticleSpec> corpus, const SimConfig& config,
                                                unsigned threads) {
    std::vector<BaselineResult> results(corpus.size());
    parallel_for(corpus.size(), threads,
                 [&](std::size_t i) { results[i] = run_test_rollout(corpus[i], config); });
    return results;
}

}  // namespace bts
