#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "bts/rng.hpp"

namespace bts {

/// Beta(alpha, beta) posterior over one arm's click probability.
struct ArmPosterior {
    double alpha = 1.0;
    double beta = 1.0;

    double mean() const noexcept { return alpha / (alpha + beta); }

    friend bool operator==(const ArmPosterior&, const ArmPosterior&) = default;
};

inline double posterior_mean(const ArmPosterior& arm) noexcept { return arm.mean(); }

enum class UpdateMethod { Summation, Normalization };

std::string_view to_string(UpdateMethod method) noexcept;

/// Parses "sum"/"summation" or "norm"/"normalization". Throws ConfigError.
UpdateMethod parse_update_method(std::string_view text);

/// Per-arm click / non-click tallies for one batch.
class BatchCounters {
public:
    explicit BatchCounters(std::size_t arm_count)
        : successes_(arm_count, 0), failures_(arm_count, 0) {}
    BatchCounters(std::vector<std::int64_t> successes, std::vector<std::int64_t> failures);

    std::size_t arm_count() const noexcept { return successes_.size(); }
    std::span<const std::int64_t> successes() const noexcept { return successes_; }
    std::span<const std::int64_t> failures() const noexcept { return failures_; }
    std::int64_t impressions(std::size_t arm) const { return successes_.at(arm) + failures_.at(arm); }

    /// Number of events recorded since the last reset (M^t).
    std::int64_t events() const noexcept;

    /// Throws std::out_of_range when arm >= arm_count().
    void record(std::size_t arm, bool reward);
    void reset() noexcept;

    friend bool operator==(const BatchCounters&, const BatchCounters&) = default;

private:
    std::vector<std::int64_t> successes_;
    std::vector<std::int64_t> failures_;
};

/// Posterior state for all K arms of one article. K is fixed at
/// construction and is at least 2.
class BanditState {
public:
    /// Throws ConfigError if fewer than two arms or any parameter is not
    /// strictly positive and finite.
    explicit BanditState(std::vector<ArmPosterior> arms);

    std::size_t arm_count() const noexcept { return arms_.size(); }
    std::span<const ArmPosterior> arms() const noexcept { return arms_; }
    const ArmPosterior& operator[](std::size_t k) const { return arms_.at(k); }

    /// Arm with the strictly highest posterior mean, lowest index on ties.
    std::size_t best_mean_arm() const noexcept;

    friend bool operator==(const BanditState&, const BanditState&) = default;

private:
    friend BanditState summation_update(const BanditState&, const BatchCounters&);
    friend BanditState normalization_update(const BanditState&, const BatchCounters&, std::int64_t);

    std::vector<ArmPosterior> arms_;
};

/// K arms at the Beta(1, 1) prior. Throws ConfigError when K < 2.
BanditState init_arms(std::size_t arm_count);

/// Draws one Beta sample per arm (exactly K draws, in arm order) and returns
/// the argmax; the lowest index wins a tie.
std::size_t sample_arm(const BanditState& state, Engine& rng);

/// Returns a copy of `counters` with the (arm, reward) event added.
BatchCounters record_response(BatchCounters counters, std::size_t arm, bool reward);

/// alpha += S_k, beta += F_k. Throws InputError on dimension mismatch.
BanditState summation_update(const BanditState& state, const BatchCounters& counters);

/// alpha += (M/K) * S_k / (S_k + F_k), beta += (M/K) * F_k / (S_k + F_k).
/// Arms without in-batch traffic are left unchanged. Throws InputError on
/// dimension mismatch or when batch_size differs from counters.events().
BanditState normalization_update(const BanditState& state, const BatchCounters& counters,
                                 std::int64_t batch_size);

BanditState apply_update(const BanditState& state, const BatchCounters& counters,
                         UpdateMethod method);

}  // namespace bts
