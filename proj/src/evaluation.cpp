#include "bts/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "bts/errors.hpp"

namespace bts {

std::optional<std::size_t> strict_plurality(std::span<const std::int64_t> impressions) {
    std::optional<std::size_t> best;
    std::int64_t best_count = 0;
    bool tied = false;
    for (std::size_t k = 0; k < impressions.size(); ++k) {
        if (impressions[k] > best_count) {
            best = k;
            best_count = impressions[k];
            tied = false;
        } else if (impressions[k] == best_count && best_count > 0) {
            tied = true;
        }
    }
    if (tied) return std::nullopt;
    return best;
}

namespace {

void check_aligned(std::size_t a, std::size_t b, const char* what) {
    if (a == 0) throw InputError(std::string(what) + ": empty input");
    if (a != b) throw InputError(std::string(what) + ": inputs differ in length");
}

bool has_traffic(const BatchRecord& rec) { return rec.batch.size > 0; }

}  // namespace

ConvergenceVerdict convergence_verdict(const ArticleResult& result, const ArticleSpec& spec, std::size_t window) {
    if (window == 0) throw InputError("convergence_verdict: window must be positive");
    ConvergenceVerdict v;
    v.optimal_arm = spec.optimal_arm();
    std::vector<std::int64_t> pooled(spec.arm_count(), 0);
    std::size_t taken = 0;
    for (auto it = result.batches.rbegin(); it != result.batches.rend() && taken < window; ++it) {
        if (!has_traffic(*it)) continue;
        for (std::size_t k = 0; k < pooled.size(); ++k) pooled[k] += it->impressions[k];
        v.stable_window_start = it->batch.index;
        ++taken;
    }
    v.plurality_arm = strict_plurality(pooled);
    v.converged_correctly = v.plurality_arm && *v.plurality_arm == v.optimal_arm;
    return v;
}

double false_convergence_rate(std::span<const ArticleResult> results, std::span<const ArticleSpec> specs,
                              std::size_t window) {
    check_aligned(results.size(), specs.size(), "false_convergence_rate");
    std::size_t failures = 0;
    for (std::size_t i = 0; i < results.size(); ++i) {
        if (!convergence_verdict(results[i], specs[i], window).converged_correctly) ++failures;
    }
    return static_cast<double>(failures) / static_cast<double>(results.size());
}

MaybeMinutes time_to_optimize(const ArticleResult& result, const ArticleSpec& spec,
                              std::optional<std::size_t> hold_batches) {
    const std::size_t optimal = spec.optimal_arm();
    std::vector<std::size_t> active;  // indices of batches with traffic
    std::vector<char> good;
    for (std::size_t i = 0; i < result.batches.size(); ++i) {
        const auto& rec = result.batches[i];
        if (!has_traffic(rec)) continue;
        active.push_back(i);
        const auto p = strict_plurality(rec.impressions);
        good.push_back(p && *p == optimal);
    }
    const std::size_t n = active.size();
    if (n == 0) return std::nullopt;
    if (hold_batches && *hold_batches == 0) throw InputError("time_to_optimize: hold_batches must be positive");

    // run[i]: length of the good streak starting at active batch i.
    std::vector<std::size_t> run(n + 1, 0);
    for (std::size_t i = n; i-- > 0;) run[i] = good[i] ? run[i + 1] + 1 : 0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t needed = hold_batches ? std::min(*hold_batches, n - i) : n - i;
        if (run[i] >= needed) return result.batches[active[i]].batch.end_minute;
    }
    return std::nullopt;
}

double selection_share(const BanditState& state, std::size_t arm, std::size_t draws, Engine& rng) {
    if (draws == 0) throw InputError("selection_share: draws must be positive");
    std::size_t wins = 0;
    for (std::size_t i = 0; i < draws; ++i) {
        if (sample_arm(state, rng) == arm) ++wins;
    }
    return static_cast<double>(wins) / static_cast<double>(draws);
}

AdversarialPrior calibrate_adversarial_prior(std::size_t arm_count, std::size_t favoured_arm,
                                             const AdversarialPriorOptions& options) {
    if (arm_count < 2) throw ConfigError("arm_count: need at least 2 arms");
    if (favoured_arm >= arm_count) throw ConfigError("favoured_arm: out of range");
    if (!(options.strength > 0.0) || !(options.other_mean > 0.0 && options.other_mean < 1.0)) {
        throw ConfigError("adversarial prior: strength must be positive and other_mean inside (0, 1)");
    }
    const double s = options.strength;
    auto build = [&](double favoured_mean) {
        std::vector<ArmPosterior> arms(arm_count,
                                       ArmPosterior{s * options.other_mean, s * (1.0 - options.other_mean)});
        arms[favoured_arm] = ArmPosterior{s * favoured_mean, s * (1.0 - favoured_mean)};
        return arms;
    };
    auto share_at = [&](double favoured_mean) {
        Engine rng(options.seed);  // common random numbers across the bisection
        return selection_share(BanditState(build(favoured_mean)), favoured_arm, options.draws, rng);
    };

    double lo = options.other_mean;
    double hi = 1.0 - 1.0 / s;
    if (share_at(hi) < options.target_share) {
        throw ConfigError("adversarial prior: target share unreachable at this strength");
    }
    double share = 0.0;
    double mid = hi;
    for (int iter = 0; iter < 60; ++iter) {
        mid = 0.5 * (lo + hi);
        share = share_at(mid);
        if (std::abs(share - options.target_share) <= options.tolerance / 4) break;
        (share < options.target_share ? lo : hi) = mid;
    }
    if (std::abs(share - options.target_share) > options.tolerance) {
        throw ConfigError("adversarial prior: calibration did not reach the target share");
    }
    return AdversarialPrior{build(mid), favoured_arm, share};
}

MaybeMinutes self_correction_experiment(const ArticleSpec& spec, std::span<const ArmPosterior> prior,
                                        const SimConfig& config, ArticleStreams streams, std::size_t streak) {
    if (streak == 0) throw InputError("self_correction_experiment: streak must be positive");
    const std::size_t optimal = spec.optimal_arm();
    // Nothing to correct towards when the best theta is shared.
    for (std::size_t k = 0; k < spec.arm_count(); ++k) {
        if (k != optimal && spec.theta_hat[k] == spec.theta_hat[optimal]) return std::nullopt;
    }
    BatchedRun run(spec, config, std::move(streams),
                   BanditState(std::vector<ArmPosterior>(prior.begin(), prior.end())));
    std::size_t held = 0;
    while (!run.done()) {
        const BatchRecord& rec = run.step();
        const auto& arms = run.state().arms();
        bool leads = true;
        for (std::size_t k = 0; k < arms.size(); ++k) {
            if (k != optimal && !(arms[optimal].mean() > arms[k].mean())) {
                leads = false;
                break;
            }
        }
        held = leads ? held + 1 : 0;
        if (held >= streak) return rec.batch.end_minute;
    }
    return std::nullopt;
}

ClickSplit click_split(const ArticleResult& result) {
    const std::int64_t first = result.total_first_hour_clicks();
    return ClickSplit{first, result.total_clicks() - first};
}

ClickSplit click_split(const BaselineResult& result) {
    return ClickSplit{result.total_testing_clicks(), result.post_clicks};
}

namespace {

double ratio_gain(std::int64_t treatment, std::int64_t reference) {
    if (reference == 0) return std::numeric_limits<double>::quiet_NaN();
    return static_cast<double>(treatment - reference) / static_cast<double>(reference);
}

void check_paired(std::span<const ArticleResult> bts, std::span<const BaselineResult> base) {
    check_aligned(bts.size(), base.size(), "click_gain");
    for (std::size_t i = 0; i < bts.size(); ++i) {
        if (bts[i].article_id != base[i].article_id) {
            throw InputError("click_gain: article " + std::to_string(i) + " is '" + bts[i].article_id +
                             "' in the bTS results but '" + base[i].article_id + "' in the baseline");
        }
    }
}

double period_value(const GainReport& g, GainPeriod period) {
    switch (period) {
        case GainPeriod::FirstHour: return g.first_hour;
        case GainPeriod::Remaining: return g.remaining;
        case GainPeriod::Total: return g.total;
    }
    return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

GainReport relative_gain(const ClickSplit& treatment, const ClickSplit& reference) {
    return GainReport{ratio_gain(treatment.first_hour, reference.first_hour),
                      ratio_gain(treatment.remaining, reference.remaining),
                      ratio_gain(treatment.total(), reference.total()), treatment, reference};
}

GainReport click_gain(std::span<const ArticleResult> bts, std::span<const BaselineResult> base) {
    check_paired(bts, base);
    ClickSplit treatment, reference;
    for (std::size_t i = 0; i < bts.size(); ++i) {
        treatment += click_split(bts[i]);
        reference += click_split(base[i]);
    }
    return relative_gain(treatment, reference);
}

ConfidenceInterval bootstrap_gain(std::span<const ArticleResult> bts, std::span<const BaselineResult> base,
                                  GainPeriod period, std::size_t resamples, std::uint64_t seed, double level) {
    check_paired(bts, base);
    if (resamples == 0) throw InputError("bootstrap_gain: resamples must be positive");
    if (!(level > 0.0 && level < 1.0)) throw InputError("bootstrap_gain: level must lie in (0, 1)");
    const std::size_t n = bts.size();
    std::vector<ClickSplit> t(n), r(n);
    for (std::size_t i = 0; i < n; ++i) {
        t[i] = click_split(bts[i]);
        r[i] = click_split(base[i]);
    }
    Engine rng(seed);
    std::vector<double> gains;
    gains.reserve(resamples);
    for (std::size_t b = 0; b < resamples; ++b) {
        ClickSplit ts, rs;
        for (std::size_t j = 0; j < n; ++j) {
            const auto i = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
            ts += t[i];
            rs += r[i];
        }
        const double g = period_value(relative_gain(ts, rs), period);
        if (!std::isnan(g)) gains.push_back(g);
    }
    if (gains.empty()) throw InputError("bootstrap_gain: gain undefined in every resample");
    std::sort(gains.begin(), gains.end());
    const double tail = (1.0 - level) / 2.0;
    auto at = [&](double q) {
        const auto idx = static_cast<std::size_t>(std::floor(q * static_cast<double>(gains.size() - 1)));
        return gains[idx];
    };
    return ConfidenceInterval{at(tail), at(1.0 - tail), level};
}

SuboptimalReport suboptimal_impressions(std::span<const ArticleResult> bts, std::span<const BaselineResult> base,
                                        std::span<const ArticleSpec> specs) {
    check_paired(bts, base);
    check_aligned(bts.size(), specs.size(), "suboptimal_impressions");
    SuboptimalReport out;
    for (std::size_t i = 0; i < bts.size(); ++i) {
        const std::size_t optimal = specs[i].optimal_arm();
        for (std::size_t k = 0; k < specs[i].arm_count(); ++k) {
            if (k == optimal) continue;
            out.bts += bts[i].impressions[k];
            out.baseline += base[i].testing_impressions[k];
        }
    }
    if (out.baseline == 0) {
        throw InputError("suboptimal_impressions: baseline has no sub-optimal impressions; ratio undefined");
    }
    out.decrease = 1.0 - static_cast<double>(out.bts) / static_cast<double>(out.baseline);
    return out;
}

const SweepCell& SweepReport::at(UpdateMethod method, Minutes interval) const {
    for (const auto& c : cells) {
        if (c.method == method && c.interval == interval) return c;
    }
    throw InputError("sweep report has no cell (" + std::string(to_string(method)) + ", " +
                     std::to_string(interval) + ")");
}

SweepReport run_sweep_grid(std::span<const ArticleSpec> corpus, std::span<const UpdateMethod> methods,
                           std::span<const Minutes> intervals, SimConfig config, std::uint64_t seed,
                           unsigned threads) {
    if (methods.empty() || intervals.empty()) throw InputError("sweep: methods and intervals must be non-empty");
    config.master_seed = seed;
    SweepReport report;
    report.reference = "none (absolute totals)";
    for (const UpdateMethod method : methods) {
        for (const Minutes interval : intervals) {
            SimConfig cell = config;
            cell.update_method = method;
            cell.update_interval = interval;
            cell.validate();
            std::vector<std::int64_t> clicks(corpus.size());
            parallel_for(corpus.size(), threads,
                         [&](std::size_t i) { clicks[i] = run_article(corpus[i], cell).total_clicks(); });
            report.cells.push_back(
                SweepCell{method, interval, std::accumulate(clicks.begin(), clicks.end(), std::int64_t{0}), 0.0});
        }
    }
    return report;
}

SweepReport with_method_deltas(SweepReport grid) {
    grid.reference = "normalization at the same interval";
    for (auto& cell : grid.cells) {
        if (cell.method != UpdateMethod::Summation) continue;
        for (const auto& other : grid.cells) {
            if (other.method == UpdateMethod::Normalization && other.interval == cell.interval) {
                cell.delta = ratio_gain(cell.total_clicks, other.total_clicks);
            }
        }
    }
    return grid;
}

SweepReport with_frequency_gaps(const SweepReport& grid) {
    SweepReport out;
    for (const auto& cell : grid.cells) {
        if (cell.method == UpdateMethod::Summation) out.cells.push_back(cell);
    }
    if (out.cells.empty()) throw InputError("frequency gaps: grid has no summation cells");
    const auto best = std::max_element(out.cells.begin(), out.cells.end(),
                                       [](const SweepCell& a, const SweepCell& b) {
                                           return a.total_clicks < b.total_clicks;
                                       });
    out.reference = "best interval (" + std::to_string(best->interval) + " min)";
    const std::int64_t best_clicks = best->total_clicks;
    for (auto& cell : out.cells) cell.delta = ratio_gain(cell.total_clicks, best_clicks);
    return out;
}

SweepReport compare_update_methods(std::span<const ArticleSpec> corpus, std::span<const Minutes> intervals,
                                   SimConfig config, std::uint64_t seed, unsigned threads) {
    const UpdateMethod methods[] = {UpdateMethod::Summation, UpdateMethod::Normalization};
    return with_method_deltas(run_sweep_grid(corpus, methods, intervals, config, seed, threads));
}

SweepReport compare_frequencies(std::span<const ArticleSpec> corpus, std::span<const Minutes> intervals,
                                SimConfig config, std::uint64_t seed, unsigned threads) {
    if (intervals.empty()) throw InputError("compare_frequencies: no intervals");
    if (!std::is_sorted(intervals.begin(), intervals.end())) {
        throw InputError("compare_frequencies: intervals must be ascending");
    }
    const UpdateMethod methods[] = {UpdateMethod::Summation};
    return with_frequency_gaps(run_sweep_grid(corpus, methods, intervals, config, seed, threads));
}

double sign_test_p_value(std::size_t wins, std::size_t losses) {
    const std::size_t n = wins + losses;
    if (n == 0) return 1.0;
    const double log_half_n = static_cast<double>(n) * std::log(0.5);
    const double lg_n1 = std::lgamma(static_cast<double>(n) + 1.0);
    double p = 0.0;
    for (std::size_t i = wins; i <= n; ++i) {
        const double log_choose =
            lg_n1 - std::lgamma(static_cast<double>(i) + 1.0) - std::lgamma(static_cast<double>(n - i) + 1.0);
        p += std::exp(log_choose + log_half_n);
    }
    return std::min(1.0, p);
}

MaybeMinutes percentile(std::span<const MaybeMinutes> values, double q) {
    if (values.empty()) throw InputError("percentile: empty input");
    if (!(q > 0.0 && q <= 1.0)) throw InputError("percentile: q must lie in (0, 1]");
    std::vector<Minutes> reached;
    for (const auto& v : values) {
        if (v) reached.push_back(*v);
    }
    std::sort(reached.begin(), reached.end());
    const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(values.size())));
    const std::size_t idx = std::max<std::size_t>(rank, 1) - 1;
    if (idx < reached.size()) return reached[idx];
    return std::nullopt;
}

std::vector<HistogramBin> histogram(std::span<const MaybeMinutes> values, Minutes bin_width,
                                    Minutes overflow_start) {
    if (bin_width <= 0 || overflow_start <= 0 || overflow_start % bin_width != 0) {
        throw InputError("histogram: overflow_start must be a positive multiple of bin_width");
    }
    const auto regular = static_cast<std::size_t>(overflow_start / bin_width);
    std::vector<HistogramBin> bins(regular + 1);
    for (std::size_t i = 0; i <= regular; ++i) bins[i].start = static_cast<Minutes>(i) * bin_width;
    for (const auto& v : values) {
        if (!v || *v >= overflow_start) {
            ++bins.back().count;
        } else {
            ++bins[static_cast<std::size_t>(std::max<Minutes>(*v, 0) / bin_width)].count;
        }
    }
    return bins;
}

std::string histogram_csv(std::span<const HistogramBin> bins) {
    std::ostringstream out;
    out << "bin_start_minutes,count\n";
    for (const auto& b : bins) out << b.start << ',' << b.count << '\n';
    return out.str();
}

}  // namespace bts
