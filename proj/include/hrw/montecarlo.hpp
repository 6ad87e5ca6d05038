#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "hrw/group.hpp"
#include "hrw/kernel.hpp"
#include "hrw/rng.hpp"

namespace hrw::mc {

enum class Scheme { Discrete, Continuous };

// Seeded replica plan. Replica k draws from a substream derived from
// (seed, k), so results are independent of the parallel schedule.
struct SimConfig {
    std::uint64_t seed = 0;
    std::uint64_t replicas = 1;
    Scheme scheme = Scheme::Discrete;
    std::uint64_t horizon_steps = 0; // discrete scheme
    double horizon_time = 0.0;       // continuous scheme
    bool track_full = false;
    unsigned threads = 0; // 0 = hardware concurrency
};

struct EmpiricalStats {
    std::size_t count = 0;
    double mean = 0.0;
    double variance = 0.0;
    double min = 0.0;
    double max = 0.0;

    double ci99_halfwidth() const;
    static EmpiricalStats from_samples(std::span<const double> xs);
};

// Jump-distance sampler: closed-form inversion for geometric laws, alias
// table over the tabulated head plus an enveloped rejection tail otherwise,
// so unbounded support is sampled without truncation bias.
class JumpSampler {
public:
    explicit JumpSampler(const kernel::KernelTables& tables);
    std::uint32_t sample(Rng& rng) const;

private:
    const kernel::KernelTables* tables_;
    bool geometric_ = false;
    double log_ratio_ = 0.0; // ln q for the closed inversion
    // alias table over 1..J
    std::vector<double> threshold_;
    std::vector<std::uint32_t> alias_;
    double head_mass_ = 1.0;
    double tail_start_prob_ = 0.0; // r_{J+1} envelope coefficient
    double tail_ratio_ = 0.0;      // envelope decay
    double tail_envelope_coef_ = 0.0;
};

// Mutable walk position with O(jump distance) updates.
class WalkState {
public:
    explicit WalkState(std::uint32_t order) : order_(order) {}

    std::uint32_t norm() const { return static_cast<std::uint32_t>(digits_.size()); }
    bool at_origin() const { return digits_.empty(); }
    const std::vector<std::uint32_t>& digits() const { return digits_; }
    group::GroupElement element() const { return {order_, digits_}; }

    void reset() { digits_.clear(); }
    void jump(std::uint32_t dist, Rng& rng);

private:
    std::uint32_t order_;
    std::vector<std::uint32_t> digits_;
};

struct PathSummary {
    std::uint64_t replica = 0;
    double end_time = 0.0; // steps for the discrete scheme
    std::uint64_t jumps = 0;
    std::uint32_t end_distance = 0;
    std::uint32_t max_distance = 0;
    std::string end_position; // only when track_full is set
};

std::vector<PathSummary> simulate(const kernel::KernelTables& tables, const SimConfig& config);

// First return time to the origin (continuous scheme), censored at the
// horizon. When every replica is censored the stats block stays empty and
// only the censoring fraction is meaningful.
struct ReturnTimeEstimate {
    EmpiricalStats uncensored;
    double censoring_fraction = 0.0;
    std::vector<double> samples;     // per replica, horizon value if censored
    std::vector<char> censored;      // aligned with samples
    double empirical_survival(double t) const;
};
ReturnTimeEstimate estimate_return_time(const kernel::KernelTables& tables,
                                        const SimConfig& config);

// Last exit time from the closed ball of the given radius (continuous
// scheme, certified-transient laws only). Paths still inside the ball in the
// final tenth of the horizon flag the estimate as biased. The total time
// spent in the ball is accumulated alongside (its mean is the ball's
// expected occupation, the time-scale separation observable).
struct LastExitEstimate {
    EmpiricalStats stats;
    double late_presence_fraction = 0.0;
    std::vector<double> samples;
    EmpiricalStats occupation;
    std::vector<double> occupation_samples;
    double moment(double zeta) const;
};
LastExitEstimate estimate_last_exit(const kernel::KernelTables& tables, const SimConfig& config,
                                    std::uint32_t radius);

// Weighted indicator with finite support.
struct SupportPoint {
    group::GroupElement point;
    double value = 1.0;
};

// Normalized occupation integral per replica for certified-recurrent laws
// with mu = 1, plus its sup-distance from the unit exponential law.
struct OccupationResult {
    std::vector<double> samples;
    double ks_exp1 = 0.0;
    double normalizer = 0.0;
};
OccupationResult occupation_statistic(const kernel::KernelTables& tables,
                                      std::span<const SupportPoint> weight, double t,
                                      const SimConfig& config);

// Sup distance between the empirical law of the samples and a supplied CDF.
double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);

// Cross-check helpers. end distances after n steps / at time t:
std::vector<std::uint32_t> end_distances(const kernel::KernelTables& tables,
                                         const SimConfig& config);
// pooled one-step transition counts of the distance process up to a level
// cap (counts land in [i][cap+1] when the next level exceeds the cap)
std::vector<std::vector<std::uint64_t>> distance_transition_counts(
    const kernel::KernelTables& tables, const SimConfig& config, std::uint32_t level_cap);

} // namespace hrw::mc
