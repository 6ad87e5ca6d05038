#include "hrw/distance_chain.hpp"

#include <cmath>
#include <stdexcept>

#include "hrw/errors.hpp"
#include "hrw/numerics.hpp"

namespace hrw::chain {

using kernel::KernelTables;

std::optional<double> ChainSpec::geometric_c() const {
    if (tables_->tail_kind() != KernelTables::Tail::GeometricTail) return std::nullopt;
    return tables_->h_at(2) / tables_->h_at(1) * order();
}

// ---------------------------------------------------------------------------
// one-step law of the distance chain

double p_ij(const ChainSpec& spec, std::uint32_t i, std::uint32_t j) {
    const auto& tb = spec.tables();
    const double n = spec.order();
    if (i == 0) return j == 0 ? 0.0 : tb.r_at(j);
    if (j > i) return tb.r_at(j);
    if (j == i) return 1.0 - tb.r_at(i) / (n - 1.0) - tb.r_tail_from(i + 1);
    if (j > 0) return tb.r_at(i) * std::pow(n, static_cast<double>(j) - static_cast<double>(i));
    return tb.r_at(i) / (std::pow(n, static_cast<double>(i) - 1.0) * (n - 1.0));
}

// ---------------------------------------------------------------------------
// drift

double drift_excess(const ChainSpec& spec, std::uint32_t i) {
    const auto c_opt = spec.geometric_c();
    if (!c_opt) throw UnsupportedSpecError("drift_excess: closed form needs a geometric law");
    const double c = *c_opt;
    const double n = spec.order();
    if (i == 0) return n / (n - c);
    // (c/N)^{i-1} [ c/(N-c) - (N-c)(N^i - 1)/(N^i (N-1)^2) ], split so the
    // bracket keeps its sign when N^-i is below double resolution
    const double head = c / (n - c) - (n - c) / ((n - 1.0) * (n - 1.0));
    const double decay = (n - c) / ((n - 1.0) * (n - 1.0)) * std::pow(n, -static_cast<double>(i));
    return num::pow_int(c / n, i - 1) * (head + decay);
}

double drift(const ChainSpec& spec, std::uint32_t i) {
    if (spec.geometric_c()) {
        const double excess = drift_excess(spec, i);
        return i == 0 ? excess : static_cast<double>(i) + excess;
    }
    return drift_series(spec, i);
}

double drift_series(const ChainSpec& spec, std::uint32_t i) {
    const auto& tb = spec.tables();
    const double n = spec.order();
    num::KahanSum acc;
    // below and at the current level
    if (i > 0) {
        for (std::uint32_t j = 1; j < i; ++j)
            acc.add(j * tb.r_at(i) * std::pow(n, static_cast<double>(j) - static_cast<double>(i)));
        acc.add(i * p_ij(spec, i, i));
    }
    // strictly above: sum j r_j with a certified geometric cutoff
    const std::uint64_t start = i + 1;
    double prev = 0.0;
    for (std::uint64_t j = start; j < start + 2000000; ++j) {
        const double term = static_cast<double>(j) * tb.r_at(j);
        acc.add(term);
        if (j > start + 8 && term < prev && term < 1e-17 * std::max(acc.value(), 1e-300)) break;
        prev = term;
    }
    return acc.value();
}

double drift_threshold(std::uint32_t order, double c) {
    if (!(c > 0.0 && c < 1.0))
        throw std::domain_error("drift_threshold: defined for 0 < c < 1 only");
    const double n = order;
    const double arg = 1.0 - c * ((n - 1.0) / (n - c)) * ((n - 1.0) / (n - c));
    return -std::log(arg) / std::log(n);
}

// ---------------------------------------------------------------------------
// passage and exit times

double HittingStats::pmf(std::uint64_t n_steps) const {
    if (n_steps == 0) return 0.0;
    return num::pow_int(1.0 - success, n_steps - 1) * success;
}

HittingStats hitting_stats(const ChainSpec& spec, std::uint32_t j) {
    if (j == 0) throw std::invalid_argument("hitting_stats: level must be >= 1");
    HittingStats out;
    out.success = spec.tables().r_tail_from(j);
    out.mean = 1.0 / out.success;
    return out;
}

HittingStats exit_stats(const ChainSpec& spec, std::uint32_t i) {
    HittingStats out;
    out.success = 1.0 - p_ij(spec, i, i);
    out.mean = 1.0 / out.success;
    return out;
}

// ---------------------------------------------------------------------------
// running maximum

namespace {

// (1 - tail_{level+1})^n computed in log space; exact 0 at level 0.
double stay_power(const ChainSpec& spec, double n_steps, std::uint32_t level) {
    const double tail = spec.tables().r_tail_from(level + 1);
    if (tail >= 1.0) return 0.0;
    return std::exp(n_steps * std::log1p(-tail));
}

} // namespace

MaxDistResult max_dist(const ChainSpec& spec, double n_steps, std::uint32_t j) {
    if (!(n_steps >= 1.0)) throw std::invalid_argument("max_dist: n must be >= 1");
    if (j == 0) throw std::invalid_argument("max_dist: level must be >= 1");
    MaxDistResult out;
    const double stay_j = stay_power(spec, n_steps, j);
    const double stay_below = stay_power(spec, n_steps, j - 1);
    out.pmf = stay_j - stay_below;
    out.survival = 1.0 - stay_below;
    return out;
}

MaxChainMatrix::MaxChainMatrix(const ChainSpec& spec, std::uint32_t levels) : levels_(levels) {
    const std::size_t dim = levels_ + 1u;
    q_.assign(dim * dim, 0.0);
    for (std::uint32_t i = 0; i <= levels_; ++i) {
        // diagonal mass is the head sum r_1 + ... + r_i (zero at the origin)
        q_[i * dim + i] = 1.0 - spec.tables().r_tail_from(i + 1);
        for (std::uint32_t j = i + 1; j <= levels_; ++j) q_[i * dim + j] = spec.tables().r_at(j);
    }
}

double MaxChainMatrix::entry(std::uint32_t i, std::uint32_t j) const {
    if (i > levels_ || j > levels_) throw std::out_of_range("MaxChainMatrix::entry");
    return q_[i * (levels_ + 1u) + j];
}

std::vector<double> MaxChainMatrix::power_row(std::uint32_t start, std::uint64_t n_steps) const {
    const std::size_t dim = levels_ + 1u;
    if (start >= dim) throw std::out_of_range("MaxChainMatrix::power_row");
    std::vector<double> v(dim, 0.0);
    v[start] = 1.0;
    // Repeated squaring of the (small, upper-triangular) matrix.
    std::vector<double> base = q_, acc;
    std::uint64_t n = n_steps;
    auto matmul = [dim](const std::vector<double>& a, const std::vector<double>& b) {
        std::vector<double> c(dim * dim, 0.0);
        for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t k = 0; k < dim; ++k) {
                const double aik = a[i * dim + k];
                if (aik == 0.0) continue;
                for (std::size_t j = 0; j < dim; ++j) c[i * dim + j] += aik * b[k * dim + j];
            }
        return c;
    };
    bool have_acc = false;
    while (n > 0) {
        if (n & 1ULL) {
            acc = have_acc ? matmul(acc, base) : base;
            have_acc = true;
        }
        n >>= 1;
        if (n) base = matmul(base, base);
    }
    if (!have_acc) { // n_steps == 0
        std::vector<double> row(dim, 0.0);
        row[start] = 1.0;
        return row;
    }
    std::vector<double> row(dim, 0.0);
    for (std::size_t j = 0; j < dim; ++j) row[j] = acc[start * dim + j];
    return row;
}

double max_matrix_n_entry(const ChainSpec& spec, std::uint64_t n_steps, std::uint32_t i,
                          std::uint32_t j) {
    if (!spec.geometric_c())
        throw UnsupportedSpecError("max_matrix_n_entry: closed form needs a geometric law");
    if (j < i) return 0.0;
    const auto n = static_cast<double>(n_steps);
    if (j == i) return stay_power(spec, n, i);
    return stay_power(spec, n, j) - stay_power(spec, n, j - 1);
}

// ---------------------------------------------------------------------------
// moments of the running maximum

MaxMoment max_moment(const ChainSpec& spec, std::uint64_t n_steps, double m_order) {
    const auto c_opt = spec.geometric_c();
    if (!c_opt) throw UnsupportedSpecError("max_moment: closed form needs a geometric law");
    if (n_steps == 0) throw std::invalid_argument("max_moment: n must be >= 1");
    if (!(m_order > 0.0)) throw std::invalid_argument("max_moment: moment order must be > 0");
    const double n = spec.order();
    const double c = *c_opt;
    const double a = c / n;
    const auto nd = static_cast<double>(n_steps);

    MaxMoment out;
    num::KahanSum exact, bound;
    std::uint32_t j = 1;
    for (;; ++j) {
        const double jm = std::pow(static_cast<double>(j), m_order);
        exact.add(jm * max_dist(spec, nd, j).pmf);
        const double aj = std::pow(a, static_cast<double>(j));
        bound.add(jm * aj * std::exp((nd - 1.0) * std::log1p(-aj)));
        // tail control: survival beyond level k is at most n a^{k-1}, and
        // k^M a^{k-1} decays geometrically once a (1+1/k)^M < 1
        const double env_ratio = a * std::pow(1.0 + 1.0 / (j + 1.0), m_order);
        if (env_ratio < 1.0) {
            const double tail = nd * std::pow(j + 1.0, m_order) * aj / (1.0 - env_ratio);
            if (tail < 1e-15 * std::max(exact.value(), 1e-300)) {
                out.tail = tail;
                break;
            }
        }
        if (j > 2000000) throw SolverError("max_moment: series did not converge");
    }
    out.exact = exact.value();
    out.bound = nd * (n - c) / c * bound.value();
    return out;
}

// ---------------------------------------------------------------------------
// exit time scales

TimescaleResult timescale_probability(const ChainSpec& spec, double mu, std::uint32_t j) {
    const auto c_opt = spec.geometric_c();
    if (!c_opt) throw UnsupportedSpecError("timescale_probability: needs a geometric-family law");
    if (!(mu >= 1.0)) throw std::invalid_argument("timescale_probability: mu must be >= 1");
    if (j == 0) throw std::invalid_argument("timescale_probability: level must be >= 1");
    const double n = spec.order();
    const double q = *c_opt / n;                  // r-ratio
    const double eta = q * std::pow(n, 1.0 / mu); // family parameter

    TimescaleResult out;
    out.steps = std::floor(std::pow(n, static_cast<double>(j) / mu));
    out.exact_stay = stay_power(spec, out.steps, j);
    out.exact_at_level = out.exact_stay - stay_power(spec, out.steps, j - 1);
    out.exact_at_next = stay_power(spec, out.steps, j + 1) - out.exact_stay;
    if (std::fabs(eta - 1.0) < 1e-9)
        out.large_j_limit = std::exp(-1.0);
    else
        out.large_j_limit = eta > 1.0 ? 0.0 : 1.0;
    const double etaj = std::pow(eta, static_cast<double>(j));
    out.large_n_at_level = std::exp(-etaj);
    out.large_n_at_next = 1.0 - std::exp(-etaj);
    return out;
}

} // namespace hrw::chain
