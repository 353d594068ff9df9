#include "bts/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "bts/errors.hpp"
#include "bts/rng.hpp"

namespace bts {

void CorpusParams::validate() const {
    if (article_count < 1) throw ConfigError("articles: must be at least 1");
    if (min_arms < 2) throw ConfigError("min_arms: need at least 2 arms, got " + std::to_string(min_arms));
    if (max_arms < min_arms) throw ConfigError("max_arms: smaller than min_arms");
    if (!(theta_min >= 0.0 && theta_min <= theta_max && theta_max <= 1.0)) {
        throw ConfigError("theta: need 0 <= theta_min <= theta_max <= 1");
    }
    if (!(min_relative_gap >= 0.0 && min_relative_gap < 1.0)) {
        throw ConfigError("gap: min_relative_gap must lie in [0, 1)");
    }
    if (min_relative_gap > 0.0 && theta_max * (1.0 - min_relative_gap) < theta_min) {
        throw ConfigError("gap: no theta pair in [theta_min, theta_max] can be that far apart");
    }
    if (min_impressions < 1 || max_impressions < min_impressions) {
        throw ConfigError("impressions: need 1 <= min_impressions <= max_impressions");
    }
    if (!(first_hour_share > 0.0 && first_hour_share < 1.0)) {
        throw ConfigError("first_hour_share: must lie in (0, 1)");
    }
    if (!(share_jitter >= 0.0 && first_hour_share * (1.0 + share_jitter) < 1.0 && share_jitter < 1.0)) {
        throw ConfigError("share_jitter: jittered first-hour share must stay inside (0, 1)");
    }
    if (trace_minutes < 60) throw ConfigError("trace_minutes: must cover at least the first hour");
}

double decay_rate_for_share(double share, Minutes window) {
    return -std::log1p(-share) / static_cast<double>(window);
}

namespace {

std::vector<double> draw_theta(const CorpusParams& p, std::size_t arms, Engine& rng) {
    std::vector<double> theta(arms);
    constexpr int kMaxAttempts = 100'000;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        for (auto& t : theta) t = p.theta_min + (p.theta_max - p.theta_min) * uniform01(rng);
        if (p.min_relative_gap <= 0.0) return theta;
        const auto best = std::max_element(theta.begin(), theta.end());
        const double cap = (1.0 - p.min_relative_gap) * *best;
        bool ok = true;
        for (auto it = theta.begin(); it != theta.end(); ++it) {
            if (it != best && *it > cap) {
                ok = false;
                break;
            }
        }
        if (ok) return theta;
    }
    throw ConfigError("gap: could not draw arm probabilities satisfying min_relative_gap");
}

ImpressionTrace draw_trace(const CorpusParams& p, Engine& rng) {
    const double log_lo = std::log(static_cast<double>(p.min_impressions));
    const double log_hi = std::log(static_cast<double>(p.max_impressions));
    const double volume = std::exp(log_lo + (log_hi - log_lo) * uniform01(rng));
    const double share = p.first_hour_share * (1.0 + p.share_jitter * (2.0 * uniform01(rng) - 1.0));
    const double rate = decay_rate_for_share(share);
    const double norm = -std::expm1(-rate * static_cast<double>(p.trace_minutes));

    std::vector<TraceEntry> entries;
    double previous_tail = 1.0;  // exp(-rate * m)
    for (Minutes m = 0; m < p.trace_minutes; ++m) {
        const double tail = std::exp(-rate * static_cast<double>(m + 1));
        const double expected = volume * (previous_tail - tail) / norm;
        previous_tail = tail;
        const double whole = std::floor(expected);
        auto count = static_cast<std::int64_t>(whole);
        if (uniform01(rng) < expected - whole) ++count;
        if (count > 0) entries.push_back({m, count});
    }
    if (entries.empty()) entries.push_back({0, 1});
    return ImpressionTrace(std::move(entries));
}

}  // namespace

std::vector<ArticleSpec> generate_synthetic_corpus(const CorpusParams& params, std::uint64_t seed) {
    params.validate();
    std::vector<ArticleSpec> corpus;
    corpus.reserve(params.article_count);
    for (std::size_t i = 0; i < params.article_count; ++i) {
        Engine rng(mix_seed(seed, i));
        const std::size_t span = params.max_arms - params.min_arms + 1;
        const std::size_t arms = params.min_arms + static_cast<std::size_t>(uniform01(rng) * span);
        char id[32];
        std::snprintf(id, sizeof id, "article-%05zu", i);
        ArticleSpec spec{id, draw_theta(params, std::min(arms, params.max_arms), rng), draw_trace(params, rng)};
        corpus.push_back(std::move(spec));
    }
    return corpus;
}

}  // namespace bts
