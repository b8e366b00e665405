#include "poolcast/special_functions.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>

namespace poolcast {

namespace {

constexpr int kMaxIter = 100000;
constexpr double kEps = 1e-16;
constexpr double kTiny = 1e-300;

void check_gamma_args(double shape, double x) {
    if (!(shape > 0.0) || !std::isfinite(shape)) throw DomainError("incomplete gamma needs shape > 0");
    if (!(x >= 0.0) || std::isnan(x)) throw DomainError("incomplete gamma needs x >= 0");
}

// log P(a, x) by its power series; log_x is passed separately so x may underflow.
double log_lower_series(double a, double x, double log_x) {
    double ap = a;
    double del = 1.0 / a;
    double sum = del;
    for (int n = 0; n < kMaxIter; ++n) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::abs(del) < std::abs(sum) * kEps) break;
    }
    return std::log(sum) - x + a * log_x - std::lgamma(a);
}

double log_lower_series(double a, double x) { return log_lower_series(a, x, std::log(x)); }

// log of Q(a, x) from the Lentz continued fraction; valid for x >= a + 1.
double log_upper_fraction(double a, double x) {
    double b = x + 1.0 - a;
    double c = 1.0 / kTiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < kMaxIter; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < kTiny) d = kTiny;
        c = b + an / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return std::log(h) - x + a * std::log(x) - std::lgamma(a);
}

}  // namespace

double reg_lower_gamma(double shape, double x) {
    check_gamma_args(shape, x);
    if (x == 0.0) return 0.0;
    if (std::isinf(x)) return 1.0;
    if (x < shape + 1.0) return std::min(1.0, std::exp(log_lower_series(shape, x)));
    return 1.0 - std::exp(log_upper_fraction(shape, x));
}

double reg_upper_gamma(double shape, double x) {
    check_gamma_args(shape, x);
    if (x == 0.0) return 1.0;
    if (std::isinf(x)) return 0.0;
    if (x < shape + 1.0) return 1.0 - std::min(1.0, std::exp(log_lower_series(shape, x)));
    return std::exp(log_upper_fraction(shape, x));
}

double log_reg_upper_gamma(double shape, double x) {
    check_gamma_args(shape, x);
    if (x == 0.0) return 0.0;
    if (std::isinf(x)) return -std::numeric_limits<double>::infinity();
    if (x < shape + 1.0) return std::log1p(-std::min(1.0, std::exp(log_lower_series(shape, x))));
    return log_upper_fraction(shape, x);
}

double log_reg_upper_gamma_from_log(double shape, double log_x) {
    if (!(shape > 0.0) || !std::isfinite(shape)) throw DomainError("incomplete gamma needs shape > 0");
    if (std::isnan(log_x)) throw DomainError("incomplete gamma needs a numeric log x");
    const double x = std::exp(log_x);
    if (x == 0.0 && log_x == -std::numeric_limits<double>::infinity()) return 0.0;
    if (x < shape + 1.0) return std::log1p(-std::min(1.0, std::exp(log_lower_series(shape, x, log_x))));
    return log_reg_upper_gamma(shape, x);
}

double digamma(double x) {
    if (!std::isfinite(x) || x <= 0.0) throw DomainError("digamma implemented for x > 0 only");
    double result = 0.0;
    while (x < 10.0) {
        result -= 1.0 / x;
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    // Bernoulli-number asymptotic tail.
    const double tail =
        inv2 * (1.0 / 12 - inv2 * (1.0 / 120 - inv2 * (1.0 / 252 - inv2 * (1.0 / 240 - inv2 * (1.0 / 132)))));
    return result + std::log(x) - 0.5 * inv - tail;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

double normal_log_cdf(double z) {
    if (z > -5.0) return std::log(normal_cdf(z));
    // Phi(z) = Q(1/2, z^2/2) / 2 for z < 0.
    return log_reg_upper_gamma(0.5, 0.5 * z * z) - std::numbers::ln2;
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("normal quantile needs 0 < p < 1");
    const double q = p - 0.5;
    double z;
    if (std::abs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        z = q *
            (((((((r * 2509.0809287301226727 + 33430.575583588128105) * r + 67265.770927008700853) * r +
                 45921.953931549871457) * r + 13731.693765509461125) * r + 1971.5909503065514427) * r +
              133.14166789178437745) * r + 3.387132872796366608) /
            (((((((r * 5226.495278852545925 + 28729.085735721942674) * r + 39307.89580009271061) * r +
                 21213.794301586595867) * r + 5394.1960214247511077) * r + 687.1870074920579083) * r +
              42.313330701600911252) * r + 1.0);
    } else {
        double r = q < 0.0 ? p : 1.0 - p;
        r = std::sqrt(-std::log(r));
        if (r <= 5.0) {
            r -= 1.6;
            z = (((((((r * 7.7454501427834140764e-4 + 0.0227238449892691845833) * r + 0.24178072517745061177) * r +
                     1.27045825245236838258) * r + 3.64784832476320460504) * r + 5.7694972214606914055) * r +
                  4.6303378461565452959) * r + 1.42343711074968357734) /
                (((((((r * 1.05075007164441684324e-9 + 5.475938084995344946e-4) * r + 0.0151986665636164571966) * r +
                     0.14810397642748007459) * r + 0.68976733498510000455) * r + 1.6763848301838038494) * r +
                  2.05319162663775882187) * r + 1.0);
        } else {
            r -= 5.0;
            z = (((((((r * 2.01033439929228813265e-7 + 2.71155556874348757815e-5) * r + 0.0012426609473880784386) * r +
                     0.026532189526576123093) * r + 0.29656057182850489123) * r + 1.7848265399172913358) * r +
                  5.4637849111641143699) * r + 6.6579046435011037772) /
                (((((((r * 2.04426310338993978564e-15 + 1.4215117583164458887e-7) * r + 1.8463183175100546818e-5) * r +
                     7.868691311456132591e-4) * r + 0.0148753612908506148525) * r + 0.13692988092273580531) * r +
                  0.59983220655588793769) * r + 1.0);
        }
        if (q < 0.0) z = -z;
    }
    // Halley step; the residual Phi(z) - p is evaluated on the tail nearer to p.
    const double e = z < 0.0 ? normal_cdf(z) - p : (1.0 - p) - normal_cdf(-z);
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * z * z);
    if (std::isfinite(u)) z -= u / (1.0 + 0.5 * z * u);
    return z;
}

double beta_pdf(double a, double b, double x) {
    if (!(x > 0.0 && x < 1.0)) return 0.0;
    return std::exp((a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - std::lgamma(a) - std::lgamma(b) +
                    std::lgamma(a + b));
}

}  // namespace poolcast
