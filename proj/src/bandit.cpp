#include "bts/bandit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "bts/errors.hpp"

namespace bts {

std::string_view to_string(UpdateMethod method) noexcept {
    switch (method) {
        case UpdateMethod::Summation: return "summation";
        case UpdateMethod::Normalization: return "normalization";
    }
    return "unknown";
}

UpdateMethod parse_update_method(std::string_view text) {
    if (text == "sum" || text == "summation") return UpdateMethod::Summation;
    if (text == "norm" || text == "normalization") return UpdateMethod::Normalization;
    throw ConfigError("method: expected sum|norm, got '" + std::string(text) + "'");
}

BatchCounters::BatchCounters(std::vector<std::int64_t> successes, std::vector<std::int64_t> failures)
    : successes_(std::move(successes)), failures_(std::move(failures)) {
    if (successes_.size() != failures_.size()) {
        throw InputError("BatchCounters: successes and failures differ in length");
    }
    for (std::size_t k = 0; k < successes_.size(); ++k) {
        if (successes_[k] < 0 || failures_[k] < 0) {
            throw InputError("BatchCounters: negative counter at arm " + std::to_string(k));
        }
    }
}

std::int64_t BatchCounters::events() const noexcept {
    return std::accumulate(successes_.begin(), successes_.end(), std::int64_t{0}) +
           std::accumulate(failures_.begin(), failures_.end(), std::int64_t{0});
}

void BatchCounters::record(std::size_t arm, bool reward) {
    if (arm >= successes_.size()) {
        throw std::out_of_range("arm index " + std::to_string(arm) + " out of range for " +
                                std::to_string(successes_.size()) + " arms");
    }
    if (reward) {
        ++successes_[arm];
    } else {
        ++failures_[arm];
    }
}

void BatchCounters::reset() noexcept {
    std::fill(successes_.begin(), successes_.end(), 0);
    std::fill(failures_.begin(), failures_.end(), 0);
}

BanditState::BanditState(std::vector<ArmPosterior> arms) : arms_(std::move(arms)) {
    if (arms_.size() < 2) {
        throw ConfigError("arm_count: need at least 2 arms, got " + std::to_string(arms_.size()));
    }
    for (std::size_t k = 0; k < arms_.size(); ++k) {
        const auto& a = arms_[k];
        if (!(a.alpha > 0.0) || !(a.beta > 0.0) || !std::isfinite(a.alpha) || !std::isfinite(a.beta)) {
            throw ConfigError("prior[" + std::to_string(k) + "]: alpha and beta must be positive and finite");
        }
    }
}

std::size_t BanditState::best_mean_arm() const noexcept {
    std::size_t best = 0;
    double best_mean = arms_[0].mean();
    for (std::size_t k = 1; k < arms_.size(); ++k) {
        const double m = arms_[k].mean();
        if (m > best_mean) {
            best_mean = m;
            best = k;
        }
    }
    return best;
}

BanditState init_arms(std::size_t arm_count) {
    if (arm_count < 2) {
        throw ConfigError("arm_count: need at least 2 arms, got " + std::to_string(arm_count));
    }
    return BanditState(std::vector<ArmPosterior>(arm_count));
}

std::size_t sample_arm(const BanditState& state, Engine& rng) {
    const auto arms = state.arms();
    std::size_t best = 0;
    double best_draw = sample_beta(arms[0].alpha, arms[0].beta, rng);
    for (std::size_t k = 1; k < arms.size(); ++k) {
        const double x = sample_beta(arms[k].alpha, arms[k].beta, rng);
        if (x > best_draw) {
            best_draw = x;
            best = k;
        }
    }
    return best;
}

BatchCounters record_response(BatchCounters counters, std::size_t arm, bool reward) {
    counters.record(arm, reward);
    return counters;
}

namespace {

void check_dimensions(const BanditState& state, const BatchCounters& counters) {
    if (counters.arm_count() != state.arm_count()) {
        throw InputError("counters have " + std::to_string(counters.arm_count()) +
                         " arms, state has " + std::to_string(state.arm_count()));
    }
}

}  // namespace

BanditState summation_update(const BanditState& state, const BatchCounters& counters) {
    check_dimensions(state, counters);
    BanditState next = state;
    const auto s = counters.successes();
    const auto f = counters.failures();
    for (std::size_t k = 0; k < next.arms_.size(); ++k) {
        next.arms_[k].alpha += static_cast<double>(s[k]);
        next.arms_[k].beta += static_cast<double>(f[k]);
    }
    return next;
}

BanditState normalization_update(const BanditState& state, const BatchCounters& counters,
                                 std::int64_t batch_size) {
    check_dimensions(state, counters);
    if (batch_size != counters.events()) {
        throw InputError("batch_size " + std::to_string(batch_size) + " does not match " +
                         std::to_string(counters.events()) + " recorded events");
    }
    BanditState next = state;
    const auto s = counters.successes();
    const auto f = counters.failures();
    const double m = static_cast<double>(batch_size);
    const double k_arms = static_cast<double>(next.arms_.size());
    for (std::size_t k = 0; k < next.arms_.size(); ++k) {
        const std::int64_t n = s[k] + f[k];
        if (n == 0) continue;  // 0/0: nothing observed for this arm
        // (M/K)(S/n) evaluated as M*S / (K*n) so integer inputs round once.
        const double denom = k_arms * static_cast<double>(n);
        next.arms_[k].alpha += m * static_cast<double>(s[k]) / denom;
        next.arms_[k].beta += m * static_cast<double>(f[k]) / denom;
    }
    return next;
}

BanditState apply_update(const BanditState& state, const BatchCounters& counters,
                         UpdateMethod method) {
    switch (method) {
        case UpdateMethod::Summation: return summation_update(state, counters);
        case UpdateMethod::Normalization:
            return normalization_update(state, counters, counters.events());
    }
    throw InputError("unknown update method");
}

}  // namespace bts
