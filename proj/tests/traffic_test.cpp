#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "bts/errors.hpp"
#include "bts/traffic.hpp"
#include "oracles.hpp"

namespace {

using namespace bts;

SimConfig config_with(Minutes interval, Minutes horizon = 2880, UpdateMethod method = UpdateMethod::Summation) {
    SimConfig c;
    c.update_interval = interval;
    c.horizon = horizon;
    c.update_method = method;
    return c;
}

std::vector<std::int64_t> sizes(const std::vector<Batch>& batches) {
    std::vector<std::int64_t> out;
    for (const auto& b : batches) out.push_back(b.size);
    return out;
}

// --- build_batches -----------------------------------------------------------

const ImpressionTrace kSixMinutes({{0, 615}, {1, 4568}, {2, 4762}, {3, 5282}, {4, 5412}, {5, 5334}});

TEST(BuildBatches, ThreeMinuteWindowsFromMinuteData) {
    EXPECT_EQ(sizes(build_batches(kSixMinutes, config_with(3, 6))), (std::vector<std::int64_t>{9945, 16028}));
}

TEST(BuildBatches, CoversWholeHorizon) {
    const auto b = build_batches(kSixMinutes, config_with(3));
    ASSERT_EQ(b.size(), 960u);
    EXPECT_EQ(b[0].size, 9945);
    EXPECT_EQ(b[1].size, 16028);
    for (std::size_t i = 2; i < b.size(); ++i) EXPECT_EQ(b[i].size, 0);
    EXPECT_EQ(b.front().index, 1);
    EXPECT_EQ(b.back().end_minute, 2880);
}

TEST(BuildBatches, SingleMinuteOfTraffic) {
    const auto b = build_batches(ImpressionTrace({{0, 100}}), config_with(5));
    EXPECT_EQ(b[0].size, 100);
    EXPECT_EQ(std::accumulate(b.begin() + 1, b.end(), std::int64_t{0},
                              [](std::int64_t acc, const Batch& x) { return acc + x.size; }),
              0);
}

TEST(BuildBatches, TrafficAtOrPastHorizonIsDropped) {
    const auto b = build_batches(ImpressionTrace({{10, 5}, {2880, 7}, {2900, 9}}), config_with(5));
    std::int64_t total = 0;
    for (const auto& x : b) total += x.size;
    EXPECT_EQ(total, 5);
}

TEST(BuildBatches, LastWindowTruncatedAtHorizon) {
    const auto b = build_batches(oracle::flat_trace(10, 1), config_with(3, 7));
    ASSERT_EQ(b.size(), 3u);
    EXPECT_EQ(b[2].start_minute, 6);
    EXPECT_EQ(b[2].end_minute, 7);
    EXPECT_EQ(sizes(b), (std::vector<std::int64_t>{3, 3, 1}));
}

TEST(BuildBatches, SizesSumToInHorizonTraffic) {
    const auto trace = oracle::decaying_trace(123456, 0.24);
    for (Minutes interval : {1, 3, 5, 10, 30, 60, 7}) {
        const auto b = build_batches(trace, config_with(interval));
        std::int64_t total = 0;
        for (const auto& x : b) total += x.size;
        EXPECT_EQ(total, trace.impressions_between(0, 2880)) << interval;
    }
}

TEST(SimConfig, RejectsNonPositiveValues) {
    EXPECT_THROW(config_with(0).validate(), ConfigError);
    EXPECT_THROW(config_with(5, 0).validate(), ConfigError);
    EXPECT_NO_THROW(config_with(60, 2880).validate());
}

TEST(ImpressionTrace, RejectsMalformedEntries) {
    EXPECT_THROW(ImpressionTrace({{0, 1}, {0, 2}}), DataError);
    EXPECT_THROW(ImpressionTrace({{3, 1}, {2, 2}}), DataError);
    EXPECT_THROW(ImpressionTrace({{-1, 1}}), DataError);
    EXPECT_THROW(ImpressionTrace({{0, -1}}), DataError);
}

TEST(ArticleSpec, Validation) {
    EXPECT_THROW((ArticleSpec{"a", {0.5}, ImpressionTrace({{0, 1}})}.validate()), DataError);
    EXPECT_THROW((ArticleSpec{"a", {0.5, 1.2}, ImpressionTrace({{0, 1}})}.validate()), DataError);
    EXPECT_THROW((ArticleSpec{"a", {0.5, 0.2}, ImpressionTrace()}.validate()), DataError);
    EXPECT_NO_THROW((ArticleSpec{"a", {0.0, 1.0}, ImpressionTrace({{0, 1}})}.validate()));
}

TEST(ArticleSpec, OptimalAndWorstArms) {
    const ArticleSpec a{"a", {0.03, 0.05, 0.05, 0.01}, {}};
    EXPECT_EQ(a.optimal_arm(), 1u);
    EXPECT_EQ(a.worst_arm(), 3u);
    const ArticleSpec tie{"t", {0.04, 0.04, 0.04}, {}};
    EXPECT_EQ(tie.optimal_arm(), 0u);
    EXPECT_EQ(tie.worst_arm(), 2u);
}

// --- simulate_response ---------------------------------------------------------

TEST(SimulateResponse, DegenerateProbabilities) {
    Engine rng(1);
    for (int i = 0; i < 10000; ++i) {
        ASSERT_FALSE(simulate_response(0.0, rng));
        ASSERT_TRUE(simulate_response(1.0, rng));
    }
}

TEST(SimulateResponse, MillionDrawMean) {
    Engine rng(2);
    int clicks = 0;
    for (int i = 0; i < 1'000'000; ++i) clicks += simulate_response(0.05, rng) ? 1 : 0;
    const double mean = clicks / 1e6;
    EXPECT_GE(mean, 0.0493);
    EXPECT_LE(mean, 0.0507);
}

// --- active_lifespan ------------------------------------------------------------

TEST(ActiveLifespan, Examples) {
    EXPECT_EQ(active_lifespan(oracle::flat_trace(100, 1)), 94);
    EXPECT_EQ(active_lifespan(ImpressionTrace({{0, 100}})), 0);
    EXPECT_EQ(active_lifespan(ImpressionTrace({{3, 5}, {50, 95}})), 50);
    EXPECT_THROW(active_lifespan(ImpressionTrace()), InputError);
    EXPECT_THROW(active_lifespan(ImpressionTrace({{0, 0}})), InputError);
}

// --- run_article ----------------------------------------------------------------

ArticleSpec article(std::vector<double> theta, ImpressionTrace trace, std::string id = "a") {
    return ArticleSpec{std::move(id), std::move(theta), std::move(trace)};
}

TEST(RunArticle, SizeOneBatchesMatchPerEventThompsonSampling) {
    const std::vector<double> theta{0.4, 0.25, 0.1};
    const auto spec = article(theta, oracle::flat_trace(3000, 1));
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto streams = ArticleStreams::derive(seed, spec.article_id, 3);
        const auto ref = oracle::per_event_thompson(theta, 3000, streams.selection, streams.responses);
        const auto res = run_article(spec, config_with(1, 3000), streams);
        ASSERT_EQ(res.batches.size(), 3000u);
        for (std::size_t e = 0; e < 3000; ++e) {
            ASSERT_EQ(res.batches[e].posterior, ref.posteriors[e]) << "seed " << seed << " event " << e;
        }
    }
}

TEST(RunArticle, PosteriorsFrozenWithinBatch) {
    const std::vector<double> theta{0.06, 0.05, 0.02};
    const auto spec = article(theta, oracle::decaying_trace(20000, 0.3));
    const auto config = config_with(10);
    BatchedRun run(spec, config, ArticleStreams::derive(4, "a", 3), init_arms(3));
    // Replay every batch from a copy of the streams with the pre-batch state held fixed.
    ArticleStreams replay = ArticleStreams::derive(4, "a", 3);
    int checked = 0;
    while (!run.done() && checked < 30) {
        const BanditState before = run.state();
        const auto& rec = run.step();
        BatchCounters expect(3);
        for (std::int64_t i = 0; i < rec.batch.size; ++i) {
            const auto arm = sample_arm(before, replay.selection);
            expect.record(arm, simulate_response(theta[arm], replay.responses[arm]));
        }
        for (std::size_t k = 0; k < 3; ++k) {
            ASSERT_EQ(rec.impressions[k], expect.impressions(k));
            ASSERT_EQ(rec.clicks[k], expect.successes()[k]);
        }
        const auto after = rec.batch.size > 0 ? summation_update(before, expect) : before;
        ASSERT_EQ(run.state(), after);
        ++checked;
    }
}

TEST(RunArticle, EmptyBatchesLeaveStateUnchanged) {
    const auto spec = article({0.5, 0.1}, ImpressionTrace({{0, 50}, {30, 50}}));
    for (const auto method : {UpdateMethod::Summation, UpdateMethod::Normalization}) {
        const auto res = run_article(spec, config_with(5, 60, method));
        ASSERT_EQ(res.batches.size(), 12u);
        for (std::size_t b = 1; b < 6; ++b) {
            EXPECT_EQ(res.batches[b].batch.size, 0);
            EXPECT_EQ(res.batches[b].posterior, res.batches[0].posterior);
        }
    }
}

TEST(RunArticle, Conservation) {
    const auto spec = article({0.05, 0.04, 0.03, 0.02}, oracle::decaying_trace(50000, 0.24, 4000));
    for (const auto method : {UpdateMethod::Summation, UpdateMethod::Normalization}) {
        for (Minutes interval : {1, 5, 60}) {
            const auto config = config_with(interval, 2880, method);
            const auto res = run_article(spec, config);
            EXPECT_TRUE(invariant_violations(res, spec, config).empty());
            EXPECT_EQ(res.total_impressions() + res.post_horizon_impressions, spec.trace.total());
            EXPECT_EQ(res.total_impressions(), spec.trace.impressions_between(0, 2880));
            for (std::size_t k = 0; k < 4; ++k) EXPECT_LE(res.clicks[k], res.impressions[k]);
        }
    }
}

TEST(RunArticle, InvariantCheckFlagsTampering) {
    const auto spec = article({0.5, 0.4}, oracle::flat_trace(20, 10));
    const auto config = config_with(5);
    auto res = run_article(spec, config);
    res.batches[0].clicks[0] = res.batches[0].impressions[0] + 1;
    EXPECT_FALSE(invariant_violations(res, spec, config).empty());
    auto res2 = run_article(spec, config);
    res2.batches[1].impressions[1] += 1;
    EXPECT_FALSE(invariant_violations(res2, spec, config).empty());
}

TEST(RunArticle, DeterministicPerSeed) {
    const auto spec = article({0.05, 0.04, 0.03}, oracle::decaying_trace(30000, 0.24));
    auto config = config_with(5);
    const auto a = run_article(spec, config);
    const auto b = run_article(spec, config);
    EXPECT_EQ(a.impressions, b.impressions);
    EXPECT_EQ(a.clicks, b.clicks);
    config.master_seed = 1;
    const auto c = run_article(spec, config);
    EXPECT_NE(a.impressions, c.impressions);
}

TEST(RunArticle, IdenticalArmsShareTraffic) {
    const auto spec = article({0.5, 0.5}, oracle::flat_trace(100, 100));
    std::int64_t arm0 = 0;
    std::int64_t total = 0;
    std::int64_t clicks = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        auto config = config_with(5, 100);
        config.master_seed = seed;
        const auto res = run_article(spec, config);
        arm0 += res.impressions[0];
        total += res.total_impressions();
        clicks += res.total_clicks();
    }
    EXPECT_NEAR(static_cast<double>(arm0) / total, 0.5, 0.05);
    EXPECT_NEAR(static_cast<double>(clicks) / total, 0.5, 4.0 * std::sqrt(0.25 / total));
}

TEST(RunArticle, ThreeArmsFindTheBestArm) {
    const auto spec = article({0.10, 0.08, 0.05}, oracle::decaying_trace(100000, 0.24));
    int converged = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        auto config = config_with(5);
        config.master_seed = seed;
        const auto res = run_article(spec, config);
        // Optimal arm holds the strict plurality in the last batch with traffic.
        for (auto it = res.batches.rbegin(); it != res.batches.rend(); ++it) {
            if (it->batch.size == 0) continue;
            const auto& n = it->impressions;
            if (n[0] > n[1] && n[0] > n[2]) ++converged;
            break;
        }
    }
    EXPECT_GE(converged, 190);
}

TEST(RunArticle, FirstHourTotals) {
    const auto spec = article({0.2, 0.1}, ImpressionTrace({{0, 10}, {59, 20}, {60, 30}, {200, 40}}));
    const auto res = run_article(spec, config_with(7));
    EXPECT_EQ(res.first_hour_impressions[0] + res.first_hour_impressions[1], 30);
    EXPECT_LE(res.total_first_hour_clicks(), res.total_clicks());
}

TEST(RunCorpus, ThreadCountDoesNotChangeResults) {
    std::vector<ArticleSpec> corpus;
    for (int i = 0; i < 9; ++i) {
        corpus.push_back(article({0.05, 0.03 + 0.002 * i}, oracle::decaying_trace(5000 + 1000 * i, 0.24),
                                 "x" + std::to_string(i)));
    }
    const auto config = config_with(5);
    const auto one = run_corpus(corpus, config, 1);
    const auto four = run_corpus(corpus, config, 4);
    ASSERT_EQ(one.size(), four.size());
    for (std::size_t i = 0; i < one.size(); ++i) {
        EXPECT_EQ(one[i].article_id, corpus[i].article_id);
        EXPECT_EQ(one[i].impressions, four[i].impressions);
        EXPECT_EQ(one[i].clicks, four[i].clicks);
    }
}

TEST(ParallelFor, PropagatesExceptions) {
    EXPECT_THROW(parallel_for(10, 3,
                              [](std::size_t i) {
                                  if (i == 7) throw std::runtime_error("boom");
                              }),
                 std::runtime_error);
}

}  // namespace
