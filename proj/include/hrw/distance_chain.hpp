#pragma once

#include <cstdint>
#include <vector>

#include "hrw/kernel.hpp"

namespace hrw::chain {

// Analytics of the distance process |xi_n| of a hierarchical walk and of its
// running maximum. Everything here is exact modulo declared truncation.
class ChainSpec {
public:
    explicit ChainSpec(const kernel::KernelTables& tables) : tables_(&tables) {}

    const kernel::KernelTables& tables() const { return *tables_; }
    std::uint32_t order() const { return tables_->order(); }
    // Set when the jump law is geometric (possibly in disguise): the
    // equivalent c with r_{j+1}/r_j = c/N.
    std::optional<double> geometric_c() const;

private:
    const kernel::KernelTables* tables_;
};

// One-step transition probability of the distance chain.
double p_ij(const ChainSpec& spec, std::uint32_t i, std::uint32_t j);

// Expected distance after one step from level i: sum_j j p_ij. Closed form
// for geometric laws, certified series otherwise.
double drift(const ChainSpec& spec, std::uint32_t i);
double drift_series(const ChainSpec& spec, std::uint32_t i);
// Signed one-step displacement of the mean, drift(i) - i, in a form whose
// sign is exact even where the increment is below the resolution of i
// (geometric laws only).
double drift_excess(const ChainSpec& spec, std::uint32_t i);

// Level above which the one-step drift of a geometric law with c < 1 turns
// negative.
double drift_threshold(std::uint32_t order, double c);

// First passage of the distance chain to level >= j (geometric law of
// success probability `p`), and first exit from level i.
struct HittingStats {
    double success = 0.0; // per-step passage probability
    double mean = 0.0;    // expected number of steps
    double pmf(std::uint64_t n_steps) const;
};
HittingStats hitting_stats(const ChainSpec& spec, std::uint32_t j);
HittingStats exit_stats(const ChainSpec& spec, std::uint32_t i);

// Distribution of the running maximum Z*_n.
struct MaxDistResult {
    double pmf = 0.0;      // P[Z*_n = j]
    double survival = 0.0; // P[Z*_n >= j]
};
MaxDistResult max_dist(const ChainSpec& spec, double n_steps, std::uint32_t j);

// Upper-triangular transition matrix of the running maximum, materialized up
// to a level cap.
class MaxChainMatrix {
public:
    MaxChainMatrix(const ChainSpec& spec, std::uint32_t levels);

    std::uint32_t levels() const { return levels_; }
    double entry(std::uint32_t i, std::uint32_t j) const;
    // dense n-step power (row-stochastic up to the declared tail)
    std::vector<double> power_row(std::uint32_t start, std::uint64_t n_steps) const;

private:
    std::uint32_t levels_;
    std::vector<double> q_; // row-major (levels+1) x (levels+1)
};

// Closed-form n-step entry of the maximum chain for geometric laws.
double max_matrix_n_entry(const ChainSpec& spec, std::uint64_t n_steps, std::uint32_t i,
                          std::uint32_t j);

// E (Z*_n)^M for geometric laws: exact series with certified tail, plus the
// simple explicit upper bound.
struct MaxMoment {
    double exact = 0.0;
    double bound = 0.0;
    double tail = 0.0; // bound on the neglected series tail
};
MaxMoment max_moment(const ChainSpec& spec, std::uint64_t n_steps, double m_order);

// Exit-time probe at the natural time scale n = floor(N^{j/mu}): the exact
// probability that the maximum stays at or below j, with the two limit
// predictions it should approach.
struct TimescaleResult {
    double exact_stay = 0.0;        // P[Z*_n <= j]
    double exact_at_level = 0.0;    // P[Z*_n = j]
    double exact_at_next = 0.0;     // P[Z*_n = j+1]
    double large_j_limit = 0.0;     // 0, 1/e or 1 depending on eta
    double large_n_at_level = 0.0;  // e^{-eta^j}
    double large_n_at_next = 0.0;   // 1 - e^{-eta^j}
    double steps = 0.0;             // floor(N^{j/mu})
};
TimescaleResult timescale_probability(const ChainSpec& spec, double mu, std::uint32_t j);

} // namespace hrw::chain
