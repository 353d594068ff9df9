#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "bts/baseline.hpp"
#include "bts/corpus_io.hpp"
#include "bts/errors.hpp"
#include "bts/evaluation.hpp"
#include "bts/experiment.hpp"
#include "bts/synthetic.hpp"
#include "bts/traffic.hpp"

namespace py = pybind11;
using namespace bts;

namespace {

ImpressionTrace make_trace(const std::vector<std::pair<Minutes, std::int64_t>>& pairs) {
    std::vector<TraceEntry> entries;
    entries.reserve(pairs.size());
    for (const auto& [m, n] : pairs) entries.push_back({m, n});
    return ImpressionTrace(std::move(entries));
}

std::vector<std::pair<Minutes, std::int64_t>> trace_pairs(const ImpressionTrace& trace) {
    std::vector<std::pair<Minutes, std::int64_t>> out;
    for (const auto& e : trace.entries()) out.emplace_back(e.minute, e.impressions);
    return out;
}

SimConfig make_config(Minutes interval, Minutes horizon, const std::string& method, std::uint64_t seed,
                      Minutes testing_minutes) {
    SimConfig c;
    c.update_interval = interval;
    c.horizon = horizon;
    c.update_method = parse_update_method(method);
    c.master_seed = seed;
    c.testing_minutes = testing_minutes;
    c.validate();
    return c;
}

}  // namespace

PYBIND11_MODULE(_bts, m) {
    m.doc() = "Batched Thompson sampling for headline testing";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
    py::register_exception<DataError>(m, "DataError", PyExc_ValueError);

    py::enum_<UpdateMethod>(m, "UpdateMethod")
        .value("Summation", UpdateMethod::Summation)
        .value("Normalization", UpdateMethod::Normalization);

    py::class_<ArmPosterior>(m, "ArmPosterior")
        .def(py::init<double, double>(), py::arg("alpha") = 1.0, py::arg("beta") = 1.0)
        .def_readwrite("alpha", &ArmPosterior::alpha)
        .def_readwrite("beta", &ArmPosterior::beta)
        .def_property_readonly("mean", &ArmPosterior::mean)
        .def("__eq__", [](const ArmPosterior& a, const ArmPosterior& b) { return a == b; })
        .def("__repr__", [](const ArmPosterior& a) {
            return "Beta(" + std::to_string(a.alpha) + ", " + std::to_string(a.beta) + ")";
        });

    py::class_<BatchCounters>(m, "BatchCounters")
        .def(py::init<std::size_t>())
        .def(py::init<std::vector<std::int64_t>, std::vector<std::int64_t>>(), py::arg("successes"),
             py::arg("failures"))
        .def_property_readonly("successes",
                               [](const BatchCounters& c) {
                                   return std::vector<std::int64_t>(c.successes().begin(), c.successes().end());
                               })
        .def_property_readonly("failures",
                               [](const BatchCounters& c) {
                                   return std::vector<std::int64_t>(c.failures().begin(), c.failures().end());
                               })
        .def_property_readonly("events", &BatchCounters::events)
        .def("record", &BatchCounters::record);

    py::class_<BanditState>(m, "BanditState")
        .def(py::init<std::vector<ArmPosterior>>())
        .def_property_readonly("arm_count", &BanditState::arm_count)
        .def_property_readonly("arms",
                               [](const BanditState& s) {
                                   return std::vector<ArmPosterior>(s.arms().begin(), s.arms().end());
                               })
        .def("best_mean_arm", &BanditState::best_mean_arm);

    m.def("init_arms", &init_arms, py::arg("arm_count"));
    m.def(
        "sample_arms",
        [](const BanditState& state, std::size_t n, std::uint64_t seed) {
            Engine rng(seed);
            std::vector<std::size_t> out(n);
            for (auto& k : out) k = sample_arm(state, rng);
            return out;
        },
        py::arg("state"), py::arg("n"), py::arg("seed"), "n successive sample_arm draws from one seeded stream");
    m.def("record_response", &record_response, py::arg("counters"), py::arg("arm"), py::arg("reward"));
    m.def("summation_update", &summation_update, py::arg("state"), py::arg("counters"));
    m.def("normalization_update", &normalization_update, py::arg("state"), py::arg("counters"),
          py::arg("batch_size"));
    m.def("posterior_mean", &posterior_mean);

    py::class_<ArticleSpec>(m, "ArticleSpec")
        .def(py::init([](std::string id, std::vector<double> theta,
                         const std::vector<std::pair<Minutes, std::int64_t>>& trace) {
                 ArticleSpec spec{std::move(id), std::move(theta), make_trace(trace)};
                 spec.validate();
                 return spec;
             }),
             py::arg("article_id"), py::arg("theta_hat"), py::arg("trace"))
        .def_readonly("article_id", &ArticleSpec::article_id)
        .def_readonly("theta_hat", &ArticleSpec::theta_hat)
        .def_property_readonly("trace", [](const ArticleSpec& a) { return trace_pairs(a.trace); })
        .def_property_readonly("total_impressions", [](const ArticleSpec& a) { return a.trace.total(); })
        .def("optimal_arm", &ArticleSpec::optimal_arm);

    py::class_<SimConfig>(m, "SimConfig")
        .def(py::init(&make_config), py::arg("update_interval") = 5, py::arg("horizon") = 2880,
             py::arg("method") = "sum", py::arg("seed") = 0, py::arg("testing_minutes") = 60)
        .def_readonly("update_interval", &SimConfig::update_interval)
        .def_readonly("horizon", &SimConfig::horizon)
        .def_readonly("update_method", &SimConfig::update_method)
        .def_readonly("master_seed", &SimConfig::master_seed);

    py::class_<Batch>(m, "Batch")
        .def_readonly("index", &Batch::index)
        .def_readonly("size", &Batch::size)
        .def_readonly("start_minute", &Batch::start_minute)
        .def_readonly("end_minute", &Batch::end_minute);

    m.def(
        "build_batches",
        [](const std::vector<std::pair<Minutes, std::int64_t>>& trace, const SimConfig& config) {
            return build_batches(make_trace(trace), config);
        },
        py::arg("trace"), py::arg("config"));
    m.def(
        "active_lifespan",
        [](const std::vector<std::pair<Minutes, std::int64_t>>& trace) { return active_lifespan(make_trace(trace)); },
        py::arg("trace"));

    py::class_<BatchRecord>(m, "BatchRecord")
        .def_readonly("batch", &BatchRecord::batch)
        .def_readonly("impressions", &BatchRecord::impressions)
        .def_readonly("clicks", &BatchRecord::clicks)
        .def_readonly("posterior", &BatchRecord::posterior);

    py::class_<ArticleResult>(m, "ArticleResult")
        .def_readonly("article_id", &ArticleResult::article_id)
        .def_readonly("batches", &ArticleResult::batches)
        .def_readonly("impressions", &ArticleResult::impressions)
        .def_readonly("clicks", &ArticleResult::clicks)
        .def_readonly("first_hour_impressions", &ArticleResult::first_hour_impressions)
        .def_readonly("first_hour_clicks", &ArticleResult::first_hour_clicks)
        .def_readonly("post_horizon_impressions", &ArticleResult::post_horizon_impressions)
        .def_property_readonly("total_clicks", &ArticleResult::total_clicks);

    m.def("run_article", py::overload_cast<const ArticleSpec&, const SimConfig&>(&run_article),
          py::arg("article"), py::arg("config"));
    m.def("invariant_violations", &invariant_violations);

    py::class_<BaselineResult>(m, "BaselineResult")
        .def_readonly("article_id", &BaselineResult::article_id)
        .def_readonly("testing_impressions", &BaselineResult::testing_impressions)
        .def_readonly("testing_clicks", &BaselineResult::testing_clicks)
        .def_readonly("winner", &BaselineResult::winner)
        .def_readonly("post_clicks", &BaselineResult::post_clicks)
        .def_readonly("test_impressions", &BaselineResult::test_impressions)
        .def_readonly("post_impressions", &BaselineResult::post_impressions)
        .def_property_readonly("total_clicks", &BaselineResult::total_clicks);

    m.def("run_test_rollout", py::overload_cast<const ArticleSpec&, const SimConfig&>(&run_test_rollout),
          py::arg("article"), py::arg("config"));

    m.def(
        "generate_synthetic_corpus",
        [](std::size_t articles, std::size_t min_arms, std::size_t max_arms, double theta_min, double theta_max,
           double min_relative_gap, std::int64_t min_impressions, std::int64_t max_impressions,
           double first_hour_share, std::uint64_t seed) {
            CorpusParams p;
            p.article_count = articles;
            p.min_arms = min_arms;
            p.max_arms = max_arms;
            p.theta_min = theta_min;
            p.theta_max = theta_max;
            p.min_relative_gap = min_relative_gap;
            p.min_impressions = min_impressions;
            p.max_impressions = max_impressions;
            p.first_hour_share = first_hour_share;
            return generate_synthetic_corpus(p, seed);
        },
        py::arg("articles") = 100, py::arg("min_arms") = 2, py::arg("max_arms") = 4, py::arg("theta_min") = 0.02,
        py::arg("theta_max") = 0.08, py::arg("min_relative_gap") = 0.0, py::arg("min_impressions") = 50'000,
        py::arg("max_impressions") = 200'000, py::arg("first_hour_share") = 0.24, py::arg("seed") = 0);
    m.def(
        "parse_corpus", [](const std::filesystem::path& path) { return parse_corpus(path); }, py::arg("path"));
    m.def(
        "write_corpus",
        [](const std::filesystem::path& path, const std::vector<ArticleSpec>& corpus) { write_corpus(path, corpus); },
        py::arg("path"), py::arg("corpus"));

    m.def(
        "false_convergence_rate",
        [](const std::vector<ArticleResult>& r, const std::vector<ArticleSpec>& s, std::size_t window) {
            return false_convergence_rate(r, s, window);
        },
        py::arg("results"), py::arg("specs"), py::arg("window") = kDefaultStableWindow);
    m.def(
        "time_to_optimize",
        [](const ArticleResult& r, const ArticleSpec& s) { return time_to_optimize(r, s); }, py::arg("result"),
        py::arg("spec"));

    py::class_<GainReport>(m, "GainReport")
        .def_readonly("first_hour", &GainReport::first_hour)
        .def_readonly("remaining", &GainReport::remaining)
        .def_readonly("total", &GainReport::total);
    m.def(
        "click_gain",
        [](const std::vector<ArticleResult>& b, const std::vector<BaselineResult>& base) {
            return click_gain(b, base);
        },
        py::arg("bts"), py::arg("baseline"));
    m.def(
        "suboptimal_decrease",
        [](const std::vector<ArticleResult>& b, const std::vector<BaselineResult>& base,
           const std::vector<ArticleSpec>& specs) { return suboptimal_impressions(b, base, specs).decrease; },
        py::arg("bts"), py::arg("baseline"), py::arg("specs"));
    m.def(
        "self_correction",
        [](const ArticleSpec& spec, const SimConfig& config, std::uint64_t seed) {
            auto prior = calibrate_adversarial_prior(spec.arm_count(), 0);
            std::swap(prior.arms[0], prior.arms[spec.worst_arm()]);
            return self_correction_experiment(spec, prior.arms, config,
                                              ArticleStreams::derive(seed, spec.article_id, spec.arm_count()));
        },
        py::arg("spec"), py::arg("config"), py::arg("seed") = 0,
        "Minutes until self-correction from the calibrated worst-arm prior, or None");
    m.def("sign_test_p_value", &sign_test_p_value);

    m.attr("__version__") = std::string(code_version());
}
