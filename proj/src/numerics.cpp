#include "hrw/numerics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace hrw::num {

double pow_int(double base, unsigned long long n) {
    double result = 1.0;
    double b = base;
    while (n > 0) {
        if (n & 1ULL) result *= b;
        b *= b;
        n >>= 1;
    }
    return result;
}

namespace {

double lower_gamma_series(double a, double x) {
    // P(a,x) = x^a e^-x / Gamma(a+1) * sum_{n>=0} x^n / ((a+1)...(a+n))
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int n = 0; n < 500; ++n) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::fabs(term) < std::fabs(sum) * 1e-17) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double upper_gamma_cf(double a, double x) {
    // Q(a,x) by Lentz continued fraction.
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < 1e-16) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

} // namespace

double reg_lower_gamma(double a, double x) {
    if (a <= 0.0) throw std::domain_error("reg_lower_gamma: a must be positive");
    if (x < 0.0) throw std::domain_error("reg_lower_gamma: x must be non-negative");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return lower_gamma_series(a, x);
    return 1.0 - upper_gamma_cf(a, x);
}

double one_minus_exp_over(double x) {
    if (x == 0.0) return 1.0;
    return -std::expm1(-x) / x;
}

double expm1_double_mode(double x) {
    if (x < 0.5) {
        // 2/x^2 * sum_{n>=2} (-1)^n (2^{n-1}-1) x^n / n!
        double sum = 0.0;
        double xn = 1.0;         // x^{n-2}
        double fact = 2.0;       // n!
        double pow2 = 2.0;       // 2^{n-1}
        double sign = 1.0;
        for (int n = 2; n < 40; ++n) {
            const double term = sign * (pow2 - 1.0) * xn / fact;
            sum += term;
            if (std::fabs(term) < 1e-18 * std::fabs(sum) && n > 4) break;
            xn *= x;
            fact *= static_cast<double>(n + 1);
            pow2 *= 2.0;
            sign = -sign;
        }
        return 2.0 * sum;
    }
    const double f = -std::expm1(-x) + 0.5 * std::expm1(-2.0 * x);
    return 2.0 * f / (x * x);
}

double regression_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("regression_slope: need >= 2 paired points");
    const auto n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

namespace {

double simpson(double a, double fa, double b, double fb, double fm) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_step(const std::function<double(double)>& f, double a, double fa, double b,
                     double fb, double m, double fm, double whole, double tol, int depth) {
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = simpson(a, fa, m, fm, flm);
    const double right = simpson(m, fm, b, fb, frm);
    const double delta = left + right - whole;
    if (depth <= 0 || std::fabs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return adaptive_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
           adaptive_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

} // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                        int max_depth) {
    const double m = 0.5 * (a + b);
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(m);
    const double whole = simpson(a, fa, b, fb, fm);
    return adaptive_step(f, a, fa, b, fb, m, fm, whole, tol, max_depth);
}

} // namespace hrw::num
