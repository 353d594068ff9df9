#include <filesystem>
#include <fstream>
#include <iterator>

#include <gtest/gtest.h>
#include <json.hpp>

#include "bts/corpus_io.hpp"
#include "bts/errors.hpp"
#include "bts/experiment.hpp"

namespace {

using namespace bts;
namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class ExperimentTest : public ::testing::Test {
protected:
    void SetUp() override {
        root_ = fs::temp_directory_path() /
                ("bts_experiment_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(root_);
    }
    void TearDown() override { fs::remove_all(root_); }

    ExperimentConfig small(Command command, const std::string& sub) const {
        ExperimentConfig c;
        c.command = command;
        c.synthetic = parse_synthetic_spec("articles=6,arms=2:3,impressions=5000:15000");
        c.sim.master_seed = 3;
        c.bootstrap_resamples = 100;
        c.out_dir = root_ / sub;
        return c;
    }

    fs::path root_;
};

TEST(ParseSyntheticSpec, KeysAndRanges) {
    const auto p = parse_synthetic_spec("articles=12,arms=3,theta=0.01:0.2,gap=0.25,impressions=1000:5000,share=0.3,"
                                        "jitter=0.1,minutes=600");
    EXPECT_EQ(p.article_count, 12u);
    EXPECT_EQ(p.min_arms, 3u);
    EXPECT_EQ(p.max_arms, 3u);
    EXPECT_EQ(p.theta_min, 0.01);
    EXPECT_EQ(p.theta_max, 0.2);
    EXPECT_EQ(p.min_relative_gap, 0.25);
    EXPECT_EQ(p.min_impressions, 1000);
    EXPECT_EQ(p.max_impressions, 5000);
    EXPECT_EQ(p.first_hour_share, 0.3);
    EXPECT_EQ(p.share_jitter, 0.1);
    EXPECT_EQ(p.trace_minutes, 600);
    EXPECT_EQ(parse_synthetic_spec("").article_count, CorpusParams{}.article_count);
}

TEST(ParseSyntheticSpec, RejectionsNameTheField) {
    auto message = [](const char* spec) {
        try {
            parse_synthetic_spec(spec);
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
        return std::string("accepted");
    };
    EXPECT_NE(message("articles=ten").find("synthetic.articles"), std::string::npos);
    EXPECT_NE(message("arms=1:2:3").find("synthetic.arms"), std::string::npos);
    EXPECT_NE(message("colour=red").find("colour"), std::string::npos);
    EXPECT_NE(message("articles").find("key=value"), std::string::npos);
    EXPECT_NE(message("arms=1").find("min_arms"), std::string::npos);
    EXPECT_NE(message("theta=0.5:0.1").find("theta"), std::string::npos);
}

TEST(ParseIntervalList, Values) {
    EXPECT_EQ(parse_interval_list("1,5,60"), (std::vector<Minutes>{1, 5, 60}));
    EXPECT_THROW(parse_interval_list("1,,5"), ConfigError);
    EXPECT_THROW(parse_interval_list("0"), ConfigError);
    EXPECT_THROW(parse_interval_list("x"), ConfigError);
}

TEST_F(ExperimentTest, ExactlyOneCorpusSource) {
    auto c = small(Command::Run, "a");
    c.corpus_path = "corpus.jsonl";
    EXPECT_THROW(c.validate(), ConfigError);
    c.corpus_path.reset();
    c.synthetic.reset();
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST_F(ExperimentTest, InvalidSimSettingsRejected) {
    auto c = small(Command::Run, "a");
    c.sim.update_interval = 0;
    EXPECT_THROW(run_experiment(c), ConfigError);
    c = small(Command::Sweep, "b");
    c.sweep_intervals = {5, 4000};
    EXPECT_THROW(run_experiment(c), ConfigError);
    c = small(Command::Run, "c");
    c.stable_window = 0;
    EXPECT_THROW(run_experiment(c), ConfigError);
}

TEST_F(ExperimentTest, SameConfigSameReport) {
    for (const Command command : {Command::Run, Command::BaselineCompare, Command::Stress}) {
        auto a = small(command, "first");
        auto b = small(command, "second");
        run_experiment(a);
        run_experiment(b);
        auto ra = ordered_json::parse(slurp(a.out_dir / "report.json"));
        auto rb = ordered_json::parse(slurp(b.out_dir / "report.json"));
        EXPECT_TRUE(ra.contains("generated_at"));
        ra.erase("generated_at");
        rb.erase("generated_at");
        EXPECT_EQ(ra.dump(), rb.dump()) << to_string(command);
        EXPECT_EQ(slurp(a.out_dir / "manifest.json"), slurp(b.out_dir / "manifest.json"));
        fs::remove_all(root_);
    }
}

TEST_F(ExperimentTest, ThreadsDoNotChangeReport) {
    auto a = small(Command::BaselineCompare, "one");
    auto b = small(Command::BaselineCompare, "four");
    b.threads = 4;
    auto ra = run_experiment(a).report;
    auto rb = run_experiment(b).report;
    EXPECT_EQ(ra["metrics"].dump(), rb["metrics"].dump());
}

TEST_F(ExperimentTest, SweepReportIsTwoByThree) {
    auto c = small(Command::Sweep, "sweep");
    c.sweep_intervals = {1, 5, 60};
    const auto report = run_experiment(c).report;
    const auto& grid = report["metrics"]["grid"]["cells"];
    ASSERT_EQ(grid.size(), 6u);
    EXPECT_EQ(grid[0]["method"], "summation");
    EXPECT_EQ(grid[3]["method"], "normalization");
    EXPECT_EQ(grid[5]["interval"], 60);
    EXPECT_EQ(report["metrics"]["update_methods"]["cells"].size(), 6u);
    EXPECT_EQ(report["metrics"]["frequencies"]["cells"].size(), 3u);
}

TEST_F(ExperimentTest, RunWritesHistogramsAndManifest) {
    auto c = small(Command::Run, "run");
    c.argv = {"bts", "run"};
    const auto outcome = run_experiment(c);
    for (const char* name : {"active_lifespan.csv", "time_to_optimize.csv", "report.json", "manifest.json"}) {
        EXPECT_TRUE(fs::exists(c.out_dir / name)) << name;
    }
    EXPECT_EQ(slurp(c.out_dir / "time_to_optimize.csv").substr(0, 24), "bin_start_minutes,count\n");
    const auto manifest = ordered_json::parse(slurp(c.out_dir / "manifest.json"));
    EXPECT_EQ(manifest["seed"], 3);
    EXPECT_EQ(manifest["command"], "run");
    EXPECT_EQ(manifest["argv"][1], "run");
    EXPECT_EQ(manifest["config"], outcome.report["config"]);
    EXPECT_EQ(manifest["corpus_digest"], outcome.report["corpus"]["digest"]);
    EXPECT_TRUE(outcome.report["invariants"]["violations"].empty());
}

TEST_F(ExperimentTest, GeneratedCorpusReproducesSyntheticRun) {
    auto gen = small(Command::Generate, "gen");
    run_experiment(gen);
    auto from_file = small(Command::Run, "file");
    from_file.synthetic.reset();
    from_file.corpus_path = gen.out_dir / "corpus.jsonl";
    auto direct = small(Command::Run, "direct");
    const auto a = run_experiment(from_file).report;
    const auto b = run_experiment(direct).report;
    EXPECT_EQ(a["corpus"]["digest"], b["corpus"]["digest"]);
    EXPECT_EQ(a["metrics"].dump(), b["metrics"].dump());
}

TEST_F(ExperimentTest, EmptyCorpusWarnsThenMetricsRefuse) {
    fs::create_directories(root_);
    const auto path = root_ / "empty.jsonl";
    std::ofstream(path).close();
    auto c = small(Command::Run, "empty");
    c.synthetic.reset();
    c.corpus_path = path;
    std::vector<std::string> warnings;
    EXPECT_TRUE(load_corpus(c, &warnings).empty());
    EXPECT_EQ(warnings.size(), 1u);
    EXPECT_THROW(run_experiment(c), InputError);
}

TEST_F(ExperimentTest, BadCorpusIsDataError) {
    fs::create_directories(root_);
    const auto path = root_ / "bad.jsonl";
    std::ofstream(path) << R"({"article_id": "x", "theta_hat": [1.2, 0.5], "trace": [[0, 1]]})" << '\n';
    auto c = small(Command::Run, "bad");
    c.synthetic.reset();
    c.corpus_path = path;
    EXPECT_THROW(run_experiment(c), DataError);
}

}  // namespace
