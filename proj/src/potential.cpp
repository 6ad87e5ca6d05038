#include "hrw/potential.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hrw/errors.hpp"
#include "hrw/numerics.hpp"

namespace hrw::potential {

using kernel::KernelTables;
using kernel::SeqRule;
using kernel::WalkSpec;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// term_j(zeta) = (N-1) N^-j h_j^-zeta for j >= start. Our closed-form rules
// have monotone consecutive ratios, so the sup of the tail term-ratio is
// attained either at the first tail index or in the limit; both are checked.
struct GreenSeries {
    enum class State { Converged, Divergent, Indeterminate } state;
    double value = 0.0;      // sum over j in [start, last]
    double tail_bound = 0.0; // bound on the remainder past `last`
    std::size_t terms = 0;
    std::vector<double> partial; // partial[i] = term at j = start + i
};

double term_ratio_limit(const KernelTables& tables, double zeta) {
    const double n = tables.order();
    switch (tables.tail_kind()) {
    case KernelTables::Tail::FiniteSupport: return kInf; // h -> 0 at finite j
    case KernelTables::Tail::GeometricTail: {
        // h ratio is exactly q, term ratio q^-zeta / N
        const double q = tables.h_at(2) / tables.h_at(1);
        return std::pow(q, -zeta) / n;
    }
    case KernelTables::Tail::RuleTail: {
        const SeqRule* rule = nullptr;
        if (const auto* mc = std::get_if<kernel::MuCLaw>(&tables.spec().law)) rule = &mc->cseq;
        if (const auto* md = std::get_if<kernel::MuDLaw>(&tables.spec().law)) rule = &md->dseq;
        const double rl = rule ? rule->ratio_limit() : 1.0;
        return std::pow(n, zeta / tables.mu() - 1.0) * std::pow(rl, -zeta);
    }
    }
    return kInf;
}

GreenSeries green_series(const KernelTables& tables, double zeta, std::uint64_t start,
                         bool keep_partials = false) {
    const double n = tables.order();
    GreenSeries out;
    out.state = GreenSeries::State::Indeterminate;

    if (tables.tail_kind() == KernelTables::Tail::FiniteSupport) {
        // holding rates vanish beyond the support: the walk is confined to a
        // finite ball and every potential power diverges
        out.state = GreenSeries::State::Divergent;
        return out;
    }

    const double rho_limit = term_ratio_limit(tables, zeta);
    auto term_at = [&](std::uint64_t j) {
        return (n - 1.0) * std::exp(-static_cast<double>(j) * std::log(n) -
                                    zeta * tables.log_h_at(j));
    };

    if (rho_limit > 1.0) {
        out.state = GreenSeries::State::Divergent;
        return out;
    }

    if (tables.tail_kind() == KernelTables::Tail::GeometricTail && rho_limit < 1.0) {
        // exactly geometric modes: the whole series sums in closed form
        out.state = GreenSeries::State::Converged;
        out.value = term_at(start) / (1.0 - rho_limit);
        out.tail_bound = 0.0;
        out.terms = 1;
        return out;
    }

    if (rho_limit == 1.0 || std::fabs(rho_limit - 1.0) < 1e-15) {
        // boundary exponent: the series is const * sum_j d_j^-zeta
        const SeqRule* rule = nullptr;
        if (const auto* mc = std::get_if<kernel::MuCLaw>(&tables.spec().law)) rule = &mc->cseq;
        if (const auto* md = std::get_if<kernel::MuDLaw>(&tables.spec().law)) rule = &md->dseq;
        if (!rule) {
            out.state = GreenSeries::State::Divergent; // geometric at the boundary
            return out;
        }
        if (!rule->power_sum_finite(tables.mu())) {
            out.state = GreenSeries::State::Divergent;
            return out;
        }
        // convergent boundary case: sum actual d-values with an enveloped tail
        const double mu = tables.mu();
        const double coef = (n - 1.0) / (n * std::pow(tables.normalizer(), mu));
        num::KahanSum acc;
        std::uint64_t k = start - 1; // term_j corresponds to d_{j-1}
        std::uint64_t count = 0;
        double prev = kInf;
        for (; count < 2000000; ++k, ++count) {
            const double dterm = std::pow(tables.d_at(k), -mu);
            const double t = coef * dterm;
            if (keep_partials) out.partial.push_back(t);
            acc.add(t);
            if (count > 64 && t < 1e-16 * acc.value() && t <= prev) break;
            prev = t;
            if (rule->power_sum_tail_bound(mu, k + 1) * coef < 1e-15 * std::max(acc.value(), 1e-300))
                break;
        }
        double env = rule->power_sum_tail_bound(mu, k + 1);
        if (tables.spec().is_mu_c()) {
            // d_k >= c_k N/(N-1), so the d-tail is enveloped by the c-tail
            env *= std::pow((n - 1.0) / n, mu);
        }
        out.state = GreenSeries::State::Converged;
        out.value = acc.value();
        out.tail_bound = coef * env;
        out.terms = count + 1;
        return out;
    }

    // rho_limit < 1: strictly summable; ratios are monotone for the closed
    // rules so max(limit, ratio at the cut) bounds every tail ratio.
    num::KahanSum acc;
    std::uint64_t j = start;
    double term = term_at(j);
    std::size_t count = 0;
    for (; count < 2000000; ++count) {
        if (keep_partials) out.partial.push_back(term);
        acc.add(term);
        const double next = term_at(j + 1);
        const double ratio_here = next / term;
        const double rho = std::max(rho_limit, ratio_here);
        if (rho < 1.0) {
            const double tail = next / (1.0 - rho);
            if (tail < 1e-16 * std::max(std::fabs(acc.value()), 1e-300) || tail < 1e-300) {
                out.state = GreenSeries::State::Converged;
                out.value = acc.value();
                out.tail_bound = tail;
                out.terms = count + 1;
                return out;
            }
        }
        term = next;
        ++j;
    }
    return out; // indeterminate at the term cap
}

} // namespace

// ---------------------------------------------------------------------------
// green_power

PotentialValue green_power(const KernelTables& tables, double zeta) {
    if (!(zeta > 0.0)) throw std::invalid_argument("green_power: zeta must be positive");
    const GreenSeries s = green_series(tables, zeta, 1);
    PotentialValue out;
    out.terms = s.terms;
    switch (s.state) {
    case GreenSeries::State::Converged:
        out.value = s.value;
        out.truncation_error = s.tail_bound;
        break;
    case GreenSeries::State::Divergent:
        out.divergent = true;
        out.value = kInf;
        break;
    case GreenSeries::State::Indeterminate: out.indeterminate = true; break;
    }
    return out;
}

// ---------------------------------------------------------------------------
// degree classification

std::string DegreeReport::decoration_name() const {
    switch (decoration) {
    case Decoration::Plus: return "plus";
    case Decoration::Minus: return "minus";
    case Decoration::Undetermined: return "undetermined";
    }
    return "undetermined";
}

std::string DegreeReport::method_name() const {
    switch (method) {
    case DegreeMethod::ClosedFormGeometric: return "closed-form-geometric";
    case DegreeMethod::ClosedFormMuFamily: return "closed-form-mu-family";
    case DegreeMethod::RatioBounds: return "ratio-bounds";
    case DegreeMethod::SummabilityTest: return "summability-test";
    }
    return "summability-test";
}

DegreeReport degree_classify(const WalkSpec& spec) {
    const double n = spec.order;
    DegreeReport rep;

    if (const auto* g = std::get_if<kernel::GeometricLaw>(&spec.law)) {
        rep.gamma = std::log(g->c) / std::log(n / g->c);
        rep.decoration = Decoration::Minus;
        rep.method = DegreeMethod::ClosedFormGeometric;
        rep.lower = rep.upper = rep.gamma;
        return rep;
    }

    const SeqRule* rule = nullptr;
    double mu = 0.0;
    if (const auto* mc = std::get_if<kernel::MuCLaw>(&spec.law)) {
        rule = &mc->cseq;
        mu = mc->mu;
    } else if (const auto* md = std::get_if<kernel::MuDLaw>(&spec.law)) {
        rule = &md->dseq;
        mu = md->mu;
    } else {
        throw UnsupportedSpecError("degree_classify: law exposes no ratio information");
    }

    auto mu_family_gamma = [&](double ratio) {
        const double x = mu * std::log(ratio) / std::log(n);
        if (x >= 1.0)
            throw DivergenceError("degree_classify: ratio exceeds N^(1/mu), walk not normalizable");
        return (mu - 1.0 + x) / (1.0 - x);
    };

    if (rule->kind == SeqRule::Kind::Geometric) {
        rep.gamma = mu_family_gamma(rule->param);
        rep.decoration = Decoration::Minus;
        rep.method = DegreeMethod::ClosedFormMuFamily;
        rep.lower = rep.upper = rep.gamma;
        return rep;
    }

    // consecutive ratio tends to 1: degree mu-1, decorated by summability
    rep.gamma = mu - 1.0;
    rep.lower = rep.upper = rep.gamma;
    rep.method = DegreeMethod::SummabilityTest;
    if (rule->power_sum_finite(mu)) {
        rep.decoration = Decoration::Plus;
    } else if (rule->monotone_nondecreasing() || rule->kind == SeqRule::Kind::Power) {
        // divergent p-series / constant comparison
        rep.decoration = Decoration::Minus;
    } else {
        rep.decoration = Decoration::Undetermined;
        rep.method = DegreeMethod::RatioBounds;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// incomplete potentials

namespace {

std::uint64_t mode_count(const KernelTables& tables, double exponent, double t) {
    const double n = tables.order();
    if (tables.tail_kind() == KernelTables::Tail::FiniteSupport)
        return tables.truncation_index();
    const double needed =
        (exponent * std::log(std::max(t, 2.0)) + 38.0 * std::log(10.0)) / std::log(n);
    return std::max<std::uint64_t>(tables.truncation_index(),
                                   static_cast<std::uint64_t>(std::ceil(needed)) + 2);
}

double weight(double n, std::uint64_t j) {
    return (n - 1.0) * std::pow(n, -static_cast<double>(j));
}

} // namespace

PotentialValue g_t_zeta(const KernelTables& tables, double zeta, double t) {
    if (!(zeta > 0.0)) throw std::invalid_argument("g_t_zeta: zeta must be positive");
    if (!(t > 0.0)) throw std::invalid_argument("g_t_zeta: t must be positive");
    const double n = tables.order();
    const std::uint64_t K = mode_count(tables, zeta, t);
    const double flat_mode = std::pow(t, zeta) / std::exp(std::lgamma(zeta + 1.0));

    num::KahanSum acc;
    for (std::uint64_t j = K; j >= 1; --j) {
        const double h = tables.h_at(j);
        const double mode =
            h == 0.0 ? flat_mode : num::reg_lower_gamma(zeta, h * t) / std::pow(h, zeta);
        acc.add(weight(n, j) * mode);
    }
    PotentialValue out;
    out.terms = K;
    if (tables.tail_kind() == KernelTables::Tail::FiniteSupport) {
        // beyond the support h vanishes exactly; the remaining mass is flat
        acc.add(std::pow(n, -static_cast<double>(K)) * flat_mode);
        out.value = acc.value();
        out.truncation_error = 0.0;
        return out;
    }
    out.value = acc.value();
    out.truncation_error = std::pow(n, -static_cast<double>(K)) * flat_mode;
    return out;
}

PotentialValue incomplete_powers(const KernelTables& tables, int k, double t) {
    if (k != 1 && k != 2) throw std::invalid_argument("incomplete_powers: k must be 1 or 2");
    if (!(t >= 0.0)) throw std::invalid_argument("incomplete_powers: t must be non-negative");
    const double n = tables.order();
    const std::uint64_t K = mode_count(tables, k, t);

    auto mode = [&](double h) {
        const double x = h * t;
        if (k == 1) return t * num::one_minus_exp_over(x);
        return t * t * num::expm1_double_mode(x);
    };

    num::KahanSum acc;
    for (std::uint64_t j = K; j >= 1; --j) acc.add(weight(n, j) * mode(tables.h_at(j)));
    PotentialValue out;
    out.terms = K;
    const double flat = k == 1 ? t : t * t;
    if (tables.tail_kind() == KernelTables::Tail::FiniteSupport) {
        acc.add(std::pow(n, -static_cast<double>(K)) * flat);
        out.value = acc.value();
        return out;
    }
    out.value = acc.value();
    out.truncation_error = std::pow(n, -static_cast<double>(K)) * flat;
    return out;
}

PotentialValue g2g(const KernelTables& tables, double t) {
    if (!(t >= 0.0)) throw std::invalid_argument("g2g: t must be non-negative");
    const PotentialValue g = green_power(tables, 1.0);
    if (!g.finite()) {
        PotentialValue out;
        out.divergent = g.divergent;
        out.indeterminate = g.indeterminate;
        out.value = kInf;
        return out;
    }
    const double n = tables.order();
    const std::uint64_t K = mode_count(tables, 2.0, std::max(t, 2.0));

    num::KahanSum acc;
    for (std::uint64_t j = K; j >= 1; --j) {
        const double h = tables.h_at(j);
        acc.add(weight(n, j) * t * t * num::expm1_double_mode(h * t) / h);
    }
    // remainder: each tail mode is at most t^2 / h, a green-series tail at 1
    const GreenSeries tail = green_series(tables, 1.0, K + 1);
    PotentialValue out;
    out.terms = K;
    out.value = acc.value();
    out.truncation_error = t * t * (tail.value + tail.tail_bound);
    return out;
}

double asymptotic_benchmark(const KernelTables& tables, double mu, double t) {
    const SeqRule* rule = nullptr;
    if (const auto* mc = std::get_if<kernel::MuCLaw>(&tables.spec().law)) rule = &mc->cseq;
    if (const auto* md = std::get_if<kernel::MuDLaw>(&tables.spec().law)) rule = &md->dseq;
    if (!rule)
        throw UnsupportedSpecError("asymptotic_benchmark: needs a mu-family law");
    if (!rule->monotone_nondecreasing())
        throw UnsupportedSpecError("asymptotic_benchmark: d-sequence must be non-decreasing");
    if (rule->power_sum_finite(mu))
        throw UnsupportedSpecError(
            "asymptotic_benchmark: inverse mu-th powers are summable (no growth regime)");
    const double n = tables.order();
    const auto jmax =
        static_cast<std::uint64_t>(std::floor(mu * std::log(t) / std::log(n)));
    num::KahanSum acc;
    for (std::uint64_t j = 0; j <= jmax; ++j) acc.add(std::pow(tables.d_at(j), -mu));
    return (n - 1.0) / (n * std::pow(tables.normalizer(), mu)) * acc.value();
}

// ---------------------------------------------------------------------------
// last exit integral

LastExitIntegral last_exit_integral(const KernelTables& tables, double mu, std::uint32_t radius) {
    if (!(mu >= 1.0)) throw std::invalid_argument("last_exit_integral: mu must be >= 1");
    LastExitIntegral out;
    const bool geometric = tables.tail_kind() == KernelTables::Tail::GeometricTail;
    const GreenSeries whole = green_series(tables, mu, 1, /*keep_partials=*/!geometric);
    if (whole.state != GreenSeries::State::Converged) {
        out.series.divergent = whole.state == GreenSeries::State::Divergent;
        out.series.indeterminate = whole.state == GreenSeries::State::Indeterminate;
        out.series.value = kInf;
        return out;
    }
    const double n = tables.order();
    const double gamma_mu = std::exp(std::lgamma(mu));

    // suffix evaluator for sum_{k>=j} (N-1) N^-k h_k^-mu
    std::vector<double> suffix;
    if (!geometric) {
        const std::size_t terms = whole.partial.size();
        suffix.assign(terms + 2, 0.0);
        suffix[terms] = whole.tail_bound * 0.5;
        for (std::size_t i = terms; i >= 1; --i)
            suffix[i - 1] = suffix[i] + whole.partial[i - 1];
    }
    auto green_from = [&](std::uint64_t j) {
        if (geometric || j - 1 >= suffix.size()) return green_series(tables, mu, j).value;
        return suffix[j - 1];
    };

    num::KahanSum acc;
    acc.add(green_from(1));
    for (std::uint32_t m = 1; m <= radius; ++m) {
        const double sphere = (n - 1.0) * std::pow(n, static_cast<double>(m) - 1.0);
        const double own = -std::exp(-static_cast<double>(m) * std::log(n) -
                                     mu * tables.log_h_at(m));
        acc.add(sphere * (own + green_from(m + 1)));
    }
    out.series.value = gamma_mu * acc.value();
    out.series.truncation_error =
        gamma_mu * whole.tail_bound * std::pow(n, static_cast<double>(radius));
    out.series.terms = whole.terms;

    if (tables.tail_kind() == KernelTables::Tail::GeometricTail) {
        const double q = tables.h_at(2) / tables.h_at(1);
        const double eta = q * std::pow(n, 1.0 / mu);
        if (eta > 1.0) {
            const double closed = gamma_mu * std::pow(n - 1.0, mu + 1.0) /
                                  std::pow(std::pow(n, (mu + 1.0) / mu) / eta - 1.0, mu) /
                                  (std::pow(eta, mu) - 1.0) *
                                  std::pow(n / std::pow(eta, mu), static_cast<double>(radius));
            out.closed_form = closed;
            const double rel = std::fabs(closed - out.series.value) /
                               std::max(std::fabs(closed), 1e-300);
            if (rel > 1e-6)
                throw std::logic_error(
                    "last_exit_integral: closed form and mode series disagree");
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// return tail (renewal identity)

ReturnTail return_tail_solve(const KernelTables& tables, double horizon, std::size_t steps,
                             double tolerance) {
    if (!(horizon > 0.0)) throw std::invalid_argument("return_tail_solve: horizon must be > 0");
    if (steps < 100) throw std::invalid_argument("return_tail_solve: need at least 100 steps");
    const std::size_t m = steps;
    const double dt = horizon / static_cast<double>(m);

    std::vector<double> p(m + 1);
    for (std::size_t i = 0; i <= m; ++i)
        p[i] = kernel::pt(tables, dt * static_cast<double>(i), 0).value;

    std::vector<double> rho(m + 1, 1.0);
    double clip = 0.0;
    // trapezoidal discretization of the convolution, solved forward;
    // p_0 = 1 keeps the forward substitution well conditioned
    for (std::size_t i = 1; i <= m; ++i) {
        double conv = 0.5 * p[i] * rho[0];
        for (std::size_t k = 1; k < i; ++k) conv += p[k] * rho[i - k];
        double value = ((1.0 - p[i]) / dt - conv) / (0.5 * p[0]);
        if (value < 0.0) {
            clip = std::max(clip, -value);
            value = 0.0;
        } else if (value > 1.0) {
            clip = std::max(clip, value - 1.0);
            value = 1.0;
        }
        rho[i] = value;
    }

    // defect of the discretized identity with the final (clipped) values;
    // subsampled on very fine grids to keep the check O(M^2 / stride)
    double defect = 0.0;
    const std::size_t stride = m > 20000 ? m / 8192 : 1;
    for (std::size_t i = 1; i <= m; i += stride) {
        double conv = 0.5 * p[i] * rho[0] + 0.5 * p[0] * rho[i];
        for (std::size_t k = 1; k < i; ++k) conv += p[k] * rho[i - k];
        defect = std::max(defect, std::fabs(dt * conv + p[i] - 1.0));
    }

    ReturnTail out;
    out.t.resize(m + 1);
    for (std::size_t i = 0; i <= m; ++i) out.t[i] = dt * static_cast<double>(i);
    out.rho = std::move(rho);
    out.residual = std::max(defect, clip);
    if (out.residual > tolerance)
        throw SolverError("return_tail_solve: residual " + std::to_string(out.residual) +
                          " above tolerance; use a finer grid");
    return out;
}

MomentEstimate return_moment(const ReturnTail& tail, double zeta) {
    if (!(zeta > 0.0)) throw std::invalid_argument("return_moment: zeta must be positive");
    const std::size_t m = tail.t.size();
    if (m < 3) throw std::invalid_argument("return_moment: tail grid too small");

    // cellwise exact integral of zeta t^{zeta-1} (a + b t) with rho linear
    num::KahanSum acc;
    for (std::size_t i = 0; i + 1 < m; ++i) {
        const double t0 = tail.t[i], t1 = tail.t[i + 1];
        const double r0 = tail.rho[i], r1 = tail.rho[i + 1];
        const double b = (r1 - r0) / (t1 - t0);
        const double a = r0 - b * t0;
        const double part = a * (std::pow(t1, zeta) - std::pow(t0, zeta)) +
                            b * zeta / (zeta + 1.0) *
                                (std::pow(t1, zeta + 1.0) - std::pow(t0, zeta + 1.0));
        acc.add(part);
    }

    // power-law fit of the last decade for the tail beyond the horizon
    const double horizon = tail.t.back();
    std::vector<double> lx, ly;
    for (std::size_t i = 1; i < m; ++i) {
        if (tail.t[i] >= horizon / 10.0 && tail.rho[i] > 0.0) {
            lx.push_back(std::log(tail.t[i]));
            ly.push_back(std::log(tail.rho[i]));
        }
    }
    MomentEstimate out;
    out.value = acc.value();
    if (lx.size() >= 2) {
        const double a = num::regression_slope(lx, ly);
        out.fitted_exponent = a;
        if (a + zeta >= 0.0) {
            out.divergence_flagged = true;
        } else {
            const double rho_h = tail.rho.back();
            // rho ~ rho_h (t/horizon)^a beyond the grid
            out.value += rho_h * zeta * std::pow(horizon, zeta) / (-(a + zeta));
        }
    } else if (tail.rho.back() > 0.0) {
        out.divergence_flagged = true; // no decay information
    }
    return out;
}

// ---------------------------------------------------------------------------
// normings and covariance

double norming(double beta, int mu, double t) {
    if (mu < 1 || mu > 3) throw std::invalid_argument("norming: mu must be 1, 2 or 3");
    if (!(beta >= 0.0)) throw std::invalid_argument("norming: beta must be >= 0");
    if (!(t > 1.0)) throw std::invalid_argument("norming: t must exceed 1");
    const double inv_mu = 1.0 / static_cast<double>(mu);
    if (std::fabs(beta - inv_mu) < 1e-12) return std::sqrt(t * std::log(std::log(t)));
    if (beta > inv_mu) return std::sqrt(t);
    return std::sqrt(t) * std::pow(std::log(t), 0.5 * (1.0 - static_cast<double>(mu) * beta));
}

double covariance_kernel_jbeta(std::uint32_t order, double beta, double normalizer,
                               std::uint32_t dist) {
    if (!(beta > 1.0))
        throw UnsupportedSpecError("covariance_kernel_jbeta: requires beta > 1 (transient case)");
    const double n = order;
    double bracket = (n - 1.0) * std::riemann_zeta(beta);
    if (dist > 0) {
        bracket -= std::pow(static_cast<double>(dist), -beta);
        num::KahanSum partial;
        for (std::uint32_t j = dist; j >= 1; --j) partial.add(std::pow(static_cast<double>(j), -beta));
        bracket -= (n - 1.0) * partial.value();
    }
    return 2.0 * n / normalizer * bracket;
}

} // namespace hrw::potential
