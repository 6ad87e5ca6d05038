#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <utility>

namespace hrw::num {

// Compensated (Kahan) accumulator for series whose terms span many orders of
// magnitude.
class KahanSum {
public:
    void add(double x) {
        const double y = x - comp_;
        const double t = sum_ + y;
        comp_ = (t - sum_) - y;
        sum_ = t;
    }

    double value() const { return sum_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

// base^n by binary exponentiation (multiplications only, sign preserved).
double pow_int(double base, unsigned long long n);

// Regularized lower incomplete gamma P(a, x) = gamma(a, x) / Gamma(a).
// Series for x < a + 1, continued fraction otherwise.
double reg_lower_gamma(double a, double x);

// (1 - e^-x)/x, stable near 0.
double one_minus_exp_over(double x);

// phi2(x) = (4/x^2) * int_0^x (e^-u - e^-2u)/... concretely:
// phi2(x) = 2*(-expm1(-x) + expm1(-2x)/2)/x^2, the t^2-normalized double
// time-integral of a single exponential mode; phi2(0) = 1.
double expm1_double_mode(double x);

// Least-squares slope of y against x.
double regression_slope(std::span<const double> x, std::span<const double> y);

// Adaptive Simpson quadrature of f on [a, b] to absolute tolerance tol.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                        int max_depth = 40);

} // namespace hrw::num
