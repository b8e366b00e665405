#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <type_traits>

#include <Eigen/Core>
#include <unsupported/Eigen/AutoDiff>

#include "poolcast/errors.hpp"

namespace poolcast {

/// Regularized lower incomplete gamma P(shape, x). Series for x < shape+1,
/// Lentz continued fraction for the complement otherwise.
double reg_lower_gamma(double shape, double x);

/// Regularized upper incomplete gamma Q(shape, x) = 1 - P(shape, x), computed
/// without cancellation in the upper tail.
double reg_upper_gamma(double shape, double x);

/// log Q(shape, x); finite far past the point where Q underflows.
double log_reg_upper_gamma(double shape, double x);
/// log Q(a, x) given log x; stays accurate when x itself underflows.
double log_reg_upper_gamma_from_log(double shape, double log_x);

double digamma(double x);

double normal_cdf(double z);
double normal_log_cdf(double z);
double normal_pdf(double z);
/// Wichura's AS241 followed by one Halley correction.
double normal_quantile(double p);

namespace detail {

inline double value_of(double x) { return x; }
template <typename Der>
double value_of(const Eigen::AutoDiffScalar<Der>& x) {
    return x.value();
}

inline double log_gamma(double x) { return std::lgamma(x); }
template <typename Der>
Eigen::AutoDiffScalar<Der> log_gamma(const Eigen::AutoDiffScalar<Der>& x) {
    using Plain = typename Eigen::internal::remove_all<Der>::type;
    return Eigen::AutoDiffScalar<Plain>(std::lgamma(x.value()), x.derivatives() * digamma(x.value()));
}

inline bool cf_converged(double del, double eps) { return std::abs(del - 1.0) < eps; }
template <typename Der>
bool cf_converged(const Eigen::AutoDiffScalar<Der>& del, double eps) {
    return std::abs(del.value() - 1.0) < eps && (del.derivatives().size() == 0 || del.derivatives().cwiseAbs().maxCoeff() < eps);
}

template <typename Scalar>
Scalar beta_continued_fraction(const Scalar& a, const Scalar& b, double x) {
    using std::abs;
    constexpr int kMaxIter = 10000;
    constexpr double kEps = 1e-16;
    constexpr double kTiny = 1e-300;

    const Scalar qab = a + b;
    const Scalar qap = a + 1.0;
    const Scalar qam = a - 1.0;
    Scalar c = Scalar(1.0);
    Scalar d = 1.0 - qab * x / qap;
    if (std::abs(value_of(d)) < kTiny) d = Scalar(kTiny);
    d = 1.0 / d;
    Scalar h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const double m2 = 2.0 * m;
        Scalar aa = m * (b - double(m)) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(value_of(d)) < kTiny) d = Scalar(kTiny);
        c = 1.0 + aa / c;
        if (std::abs(value_of(c)) < kTiny) c = Scalar(kTiny);
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + double(m)) * (qab + double(m)) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(value_of(d)) < kTiny) d = Scalar(kTiny);
        c = 1.0 + aa / c;
        if (std::abs(value_of(c)) < kTiny) c = Scalar(kTiny);
        d = 1.0 / d;
        const Scalar del = d * c;
        h *= del;
        if (cf_converged(del, kEps * 8)) return h;
    }
    throw DomainError("incomplete beta continued fraction did not converge");
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b). Templated on the shape scalar so the
/// same kernel yields shape derivatives when instantiated with AutoDiffScalar.
template <typename Scalar>
    requires(!std::is_integral_v<Scalar>)
Scalar reg_inc_beta(const Scalar& a, const Scalar& b, double x) {
    using std::exp;
    using std::log;
    const double av = detail::value_of(a);
    const double bv = detail::value_of(b);
    if (!(av > 0.0) || !(bv > 0.0) || !std::isfinite(av) || !std::isfinite(bv))
        throw DomainError("incomplete beta needs a > 0 and b > 0");
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("incomplete beta needs 0 <= x <= 1, got " + std::to_string(x));
    if (x == 0.0) return Scalar(0.0) * a;
    if (x == 1.0) return Scalar(0.0) * a + 1.0;

    const Scalar log_front = a * std::log(x) + b * std::log1p(-x) - detail::log_gamma(a) - detail::log_gamma(b) +
                             detail::log_gamma(Scalar(a + b));
    if (x < (av + 1.0) / (av + bv + 2.0)) {
        return exp(log_front) * detail::beta_continued_fraction(a, b, x) / a;
    }
    return 1.0 - exp(log_front) * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

inline double reg_inc_beta(double a, double b, double x) { return reg_inc_beta<double>(a, b, x); }

/// Density of Beta(a, b) at x, the x-derivative of reg_inc_beta.
double beta_pdf(double a, double b, double x);

}  // namespace poolcast
