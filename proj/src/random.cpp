#include "poolcast/random.hpp"

#include <cmath>

#include "poolcast/errors.hpp"
#include "poolcast/special_functions.hpp"

namespace poolcast {

double CounterRng::normal() { return normal_quantile(uniform()); }

double CounterRng::gamma(double shape, double rate) {
    if (!(shape > 0.0) || !(rate > 0.0)) throw DomainError("gamma variate needs positive shape and rate");
    if (shape < 1.0) {
        const double boost = std::pow(uniform(), 1.0 / shape);
        return gamma(shape + 1.0, rate) * boost;
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x;
        double v;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / rate;
    }
}

double CounterRng::beta(double a, double b) {
    const double x = gamma(a);
    const double y = gamma(b);
    return x / (x + y);
}

std::uint64_t CounterRng::poisson(double mean) {
    if (!(mean >= 0.0) || !std::isfinite(mean)) throw DomainError("poisson mean must be finite and >= 0");
    // Inversion in chunks of mean <= 30 keeps exp(-mean) well away from underflow.
    std::uint64_t total = 0;
    double remaining = mean;
    while (remaining > 0.0) {
        const double chunk = std::min(remaining, 30.0);
        remaining -= chunk;
        const double u = uniform();
        double prob = std::exp(-chunk);
        double cdf = prob;
        std::uint64_t k = 0;
        while (u > cdf && k < 100000) {
            ++k;
            prob *= chunk / static_cast<double>(k);
            cdf += prob;
            if (prob == 0.0) break;
        }
        total += k;
    }
    return total;
}

std::uint64_t CounterRng::below(std::uint64_t n) {
    if (n == 0) throw DomainError("below(0)");
    // Lemire's multiply-shift with rejection.
    for (;;) {
        __extension__ using u128 = unsigned __int128;
        const u128 m = static_cast<u128>(next_u64()) * n;
        const auto low = static_cast<std::uint64_t>(m);
        if (low >= n || low >= (-n) % n) return static_cast<std::uint64_t>(m >> 64);
    }
}

}  // namespace poolcast
