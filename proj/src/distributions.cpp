#include "poolcast/distributions.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "poolcast/errors.hpp"
#include "poolcast/special_functions.hpp"

namespace poolcast {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_finite(double z) {
    if (!std::isfinite(z)) throw DomainError("link argument must be finite");
}

// log of the exponential-power tail P(Z > |z|) for the standard member.
double ep_log_tail(double eta, double z) {
    const double az = std::abs(z);
    if (az == 0.0) return -std::numbers::ln2;
    return log_reg_upper_gamma_from_log(1.0 / eta, eta * std::log(az) - std::log(eta)) - std::numbers::ln2;
}

double ep_log_pdf(double eta, double z) {
    const double az = std::abs(z);
    const double kernel = az == 0.0 ? 0.0 : std::exp(eta * std::log(az) - std::log(eta));
    return -kernel - std::numbers::ln2 - std::log(eta) / eta - std::lgamma(1.0 + 1.0 / eta);
}

double logistic_log_cdf(double z) { return z < 0.0 ? z - std::log1p(std::exp(z)) : -std::log1p(std::exp(-z)); }

// Bracketed Newton on g(z) = log tail(z) - log q for z > 0.
double ep_upper_quantile(double eta, double q) {
    const double log_q = std::log(q);
    const double scale = std::sqrt(link_variance(LinkFamily::exponential_power(eta)));
    auto g = [&](double z) { return ep_log_tail(eta, z) - log_q; };

    double lo = 0.0;
    double hi = std::max(std::abs(normal_quantile(q)) * scale, 1e-3);
    while (g(hi) > 0.0) {
        lo = hi;
        hi *= 2.0;
        if (!std::isfinite(hi)) throw DomainError("exponential-power quantile bracket diverged");
    }
    double z = std::abs(normal_quantile(q)) * scale;
    if (!(z > lo && z < hi)) z = 0.5 * (lo + hi);

    for (int iter = 0; iter < 400; ++iter) {
        const double gz = g(z);
        if (gz == 0.0) return z;
        if (gz > 0.0) lo = z;
        else hi = z;
        const double slope = -std::exp(ep_log_pdf(eta, z) - ep_log_tail(eta, z));
        double next = z - gz / slope;
        if (!std::isfinite(next) || slope == 0.0 || next <= lo || next >= hi) next = 0.5 * (lo + hi);
        if (std::abs(next - z) < 1e-12 * std::max(1.0, z)) return next;
        z = next;
    }
    return z;
}

}  // namespace

LinkFamily LinkFamily::exponential_power(double power) {
    if (!(power > 0.0) || !std::isfinite(power))
        throw DomainError("exponential-power shape must be positive");
    if (power > kMaxPower) throw DomainError("exponential-power shape above 64 is not supported");
    return LinkFamily(Kind::ExponentialPower, power);
}

LinkFamily LinkFamily::from_name(const std::string& name, double power) {
    if (name == "normal" || name == "probit") return normal();
    if (name == "logistic" || name == "logit") return logistic();
    if (name == "ep" || name == "exponential-power") return exponential_power(power);
    throw SchemaError("unknown link family '" + name + "'");
}

std::string LinkFamily::name() const {
    switch (kind_) {
        case Kind::StandardNormal: return "normal";
        case Kind::StandardLogistic: return "logistic";
        case Kind::ExponentialPower: return "ep";
    }
    return "unknown";
}

double link_cdf(const LinkFamily& family, double z) {
    check_finite(z);
    switch (family.kind()) {
        case LinkFamily::Kind::StandardNormal: return normal_cdf(z);
        case LinkFamily::Kind::StandardLogistic: return 1.0 / (1.0 + std::exp(-z));
        case LinkFamily::Kind::ExponentialPower: {
            if (z == 0.0) return 0.5;
            const double tail = std::exp(ep_log_tail(family.power(), z));
            return z < 0.0 ? tail : 1.0 - tail;
        }
    }
    return 0.0;
}

double link_log_cdf(const LinkFamily& family, double z) {
    check_finite(z);
    switch (family.kind()) {
        case LinkFamily::Kind::StandardNormal: return normal_log_cdf(z);
        case LinkFamily::Kind::StandardLogistic: return logistic_log_cdf(z);
        case LinkFamily::Kind::ExponentialPower: {
            if (z <= 0.0) return ep_log_tail(family.power(), z);
            return std::log1p(-std::exp(ep_log_tail(family.power(), z)));
        }
    }
    return kNegInf;
}

double link_log_pdf(const LinkFamily& family, double z) {
    check_finite(z);
    switch (family.kind()) {
        case LinkFamily::Kind::StandardNormal: return -0.5 * z * z - 0.5 * std::log(2.0 * std::numbers::pi);
        case LinkFamily::Kind::StandardLogistic: {
            const double a = std::abs(z);
            return -a - 2.0 * std::log1p(std::exp(-a));
        }
        case LinkFamily::Kind::ExponentialPower: return ep_log_pdf(family.power(), z);
    }
    return kNegInf;
}

double link_pdf(const LinkFamily& family, double z) { return std::exp(link_log_pdf(family, z)); }

double link_quantile(const LinkFamily& family, double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("link quantile needs 0 < p < 1");
    switch (family.kind()) {
        case LinkFamily::Kind::StandardNormal: return normal_quantile(p);
        case LinkFamily::Kind::StandardLogistic: return std::log(p) - std::log1p(-p);
        case LinkFamily::Kind::ExponentialPower: {
            if (p == 0.5) return 0.0;
            const double z = ep_upper_quantile(family.power(), std::min(p, 1.0 - p));
            return p < 0.5 ? -z : z;
        }
    }
    return 0.0;
}

double link_variance(const LinkFamily& family) {
    switch (family.kind()) {
        case LinkFamily::Kind::StandardNormal: return 1.0;
        case LinkFamily::Kind::StandardLogistic: return std::numbers::pi * std::numbers::pi / 3.0;
        case LinkFamily::Kind::ExponentialPower: {
            const double eta = family.power();
            return std::exp(2.0 / eta * std::log(eta) + std::lgamma(3.0 / eta) - std::lgamma(1.0 / eta));
        }
    }
    return 0.0;
}

}  // namespace poolcast
