#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hrw/kernel.hpp"

namespace hrw::potential {

// Scalar with a rigorous truncation-error bound, or a certified divergence
// flag. An indeterminate result means neither a convergence nor a divergence
// certificate could be produced at the configured term cap; it is never a
// silent guess.
struct PotentialValue {
    double value = 0.0;
    double truncation_error = 0.0;
    bool divergent = false;
    bool indeterminate = false;
    std::size_t terms = 0;

    bool finite() const { return !divergent && !indeterminate; }
};

enum class Decoration { Plus, Minus, Undetermined };

enum class DegreeMethod { ClosedFormGeometric, ClosedFormMuFamily, RatioBounds, SummabilityTest };

// Degree of transience/recurrence with boundary decoration. When only
// consecutive-ratio bounds are available, [lower, upper] brackets the degree
// and the decoration stays undetermined.
struct DegreeReport {
    double gamma = 0.0;
    Decoration decoration = Decoration::Undetermined;
    DegreeMethod method = DegreeMethod::SummabilityTest;
    double lower = 0.0;
    double upper = 0.0;

    std::string decoration_name() const;
    std::string method_name() const;
};

// Survival function of the excursion length from the origin on a uniform
// time grid, recovered from the renewal identity.
struct ReturnTail {
    std::vector<double> t;   // t[0] = 0
    std::vector<double> rho; // rho[0] = 1, non-increasing, in [0,1]
    double residual = 0.0;   // max defect of the discretized identity + clip size
};

struct MomentEstimate {
    double value = 0.0;
    bool divergence_flagged = false;
    double fitted_exponent = 0.0; // a in rho_t ~ t^a over the last decade
};

// Value at the origin of the zeta-th Green-operator power,
// (N-1) sum_j N^-j h_j^-zeta, with certified tail handling.
PotentialValue green_power(const kernel::KernelTables& tables, double zeta);

// Degree classification from the law's closed form or a summability
// certificate; falls back to ratio bounds.
DegreeReport degree_classify(const kernel::WalkSpec& spec);

// Time-cut fractional power at the origin:
// (1/Gamma(zeta)) int_0^t s^{zeta-1} p_s(0,0) ds, mode-by-mode.
PotentialValue g_t_zeta(const kernel::KernelTables& tables, double zeta, double t);

// Integer incomplete-potential powers at the origin: k = 1 is the occupation
// integral int_0^t p_s(0,0) ds, k = 2 the double integral
// 2 int_0^t int_0^r p_{s+r}(0,0) ds dr.
PotentialValue incomplete_powers(const kernel::KernelTables& tables, int k, double t);

// (G_t^2 G)(0,0) = 2 int_0^t int_0^r int_0^inf p_{s+r+u}(0,0) du ds dr;
// divergent whenever the full potential diverges.
PotentialValue g2g(const kernel::KernelTables& tables, double t);

// Predicted growth of the mu-th incomplete power for monotone d-sequences
// whose mu-th inverse powers are not summable:
// (N-1)/(N D^mu) sum_{j=0}^{floor(mu log t / log N)} d_j^-mu.
double asymptotic_benchmark(const kernel::KernelTables& tables, double mu, double t);

// int_0^inf t^{mu-1} P_t(0, B_R) dt, evaluated mode-by-mode; for laws that
// are geometric in disguise the closed form is returned alongside and both
// routes are required to agree.
struct LastExitIntegral {
    PotentialValue series;
    std::optional<double> closed_form;
};
LastExitIntegral last_exit_integral(const kernel::KernelTables& tables, double mu,
                                    std::uint32_t radius);

// Solves int_0^t p_s(0,0) rho_{t-s} ds + p_t(0,0) = 1 for rho on a uniform
// grid of M steps over [0, horizon] (trapezoidal, forward substitution).
ReturnTail return_tail_solve(const kernel::KernelTables& tables, double horizon, std::size_t steps,
                             double tolerance = 1e-6);

// Moment of the excursion length from the solved tail: quadrature over the
// grid plus a fitted power-law tail; flags likely divergence when the fitted
// exponent a satisfies a + zeta >= 0.
MomentEstimate return_moment(const ReturnTail& tail, double zeta);

// Occupation-fluctuation norming for the (j+1)^beta family at branching
// levels mu = 1, 2, 3.
double norming(double beta, int mu, double t);

// Covariance kernel of the limit fluctuation field for the transient
// (j+1)^beta family (beta > 1) at hierarchical distance dist.
double covariance_kernel_jbeta(std::uint32_t order, double beta, double normalizer,
                               std::uint32_t dist);

} // namespace hrw::potential
