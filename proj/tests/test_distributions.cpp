#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "poolcast/distributions.hpp"
#include "poolcast/errors.hpp"
#include "poolcast/random.hpp"
#include "poolcast/special_functions.hpp"

using namespace poolcast;

namespace {

std::vector<LinkFamily> all_families() {
    return {LinkFamily::normal(), LinkFamily::logistic(), LinkFamily::exponential_power(0.5),
            LinkFamily::exponential_power(1.0), LinkFamily::exponential_power(2.0),
            LinkFamily::exponential_power(4.0), LinkFamily::exponential_power(9.0),
            LinkFamily::exponential_power(40.0), LinkFamily::exponential_power(64.0)};
}

// EP(eta) density by direct formula, integrated by Simpson from 0 to z.
double ep_cdf_simpson(double eta, double z) {
    const double norm = 2.0 * std::pow(eta, 1.0 / eta) * std::tgamma(1.0 + 1.0 / eta);
    auto pdf = [&](double x) { return std::exp(-std::pow(std::abs(x), eta) / eta) / norm; };
    const int n = 20000;
    const double h = z / n;
    double acc = 0.0;
    for (int i = 0; i <= n; ++i) acc += ((i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0)) * pdf(i * h);
    return 0.5 + acc * h / 3.0;
}

}  // namespace

TEST_CASE("link cdf fixtures") {
    const auto ep2 = LinkFamily::exponential_power(2.0);
    CHECK(link_cdf(ep2, 0.0) == 0.5);
    CHECK(std::abs(link_cdf(ep2, 1.959964) - 0.975) < 1e-7);
    CHECK(link_cdf(LinkFamily::logistic(), 0.0) == 0.5);
    CHECK(link_cdf(LinkFamily::normal(), -0.3608) == doctest::Approx(0.3591).epsilon(1e-3));
    CHECK(std::abs(link_cdf(LinkFamily::normal(), -1.25 / std::sqrt(12.0)) - 0.3591) < 5e-4);
}

TEST_CASE("exponential-power cdf against numerical integration of its density") {
    for (double eta : {1.0, 1.5, 3.0, 9.0})
        for (double z : {0.2, 0.9, 1.7, 2.6}) {
            CAPTURE(eta);
            CAPTURE(z);
            CHECK(std::abs(link_cdf(LinkFamily::exponential_power(eta), z) - ep_cdf_simpson(eta, z)) < 1e-9);
        }
    // Laplace member: 1 - exp(-z)/2.
    for (double z : {0.1, 1.0, 5.0}) CHECK(std::abs(link_cdf(LinkFamily::exponential_power(1.0), z) - (1 - 0.5 * std::exp(-z))) < 1e-14);
}

TEST_CASE("link cdf errors on non-finite arguments") {
    CHECK_THROWS_AS(link_cdf(LinkFamily::normal(), std::numeric_limits<double>::infinity()), DomainError);
    CHECK_THROWS_AS(link_cdf(LinkFamily::exponential_power(3.0), std::nan("")), DomainError);
}

TEST_CASE("link quantile fixtures") {
    for (const auto& f : all_families()) CHECK(link_quantile(f, 0.5) == 0.0);
    CHECK(link_quantile(LinkFamily::logistic(), 0.75) == doctest::Approx(std::log(3.0)).epsilon(1e-15));
    CHECK(std::abs(link_quantile(LinkFamily::exponential_power(2.0), 0.975) - normal_quantile(0.975)) < 1e-10);
    CHECK(link_quantile(LinkFamily::exponential_power(2.0), 0.975) == doctest::Approx(1.959964).epsilon(1e-6));
    CHECK_THROWS_AS(link_quantile(LinkFamily::normal(), 0.0), DomainError);
    CHECK_THROWS_AS(link_quantile(LinkFamily::exponential_power(3.0), 1.0), DomainError);
}

TEST_CASE("link variance fixtures") {
    CHECK(link_variance(LinkFamily::exponential_power(2.0)) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(link_variance(LinkFamily::exponential_power(1.0)) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(link_variance(LinkFamily::logistic()) == doctest::Approx(std::numbers::pi * std::numbers::pi / 3).epsilon(1e-15));
    for (const auto& f : all_families()) CHECK(link_variance(f) > 0.0);
}

TEST_CASE("family construction limits") {
    CHECK_THROWS_AS(LinkFamily::exponential_power(0.0), DomainError);
    CHECK_THROWS_AS(LinkFamily::exponential_power(64.5), DomainError);
    CHECK_NOTHROW(LinkFamily::exponential_power(64.0));
    CHECK(LinkFamily::from_name("probit") == LinkFamily::normal());
    CHECK_THROWS_AS(LinkFamily::from_name("cauchy"), SchemaError);
}

TEST_CASE("quantile round trip on a dense grid for every family") {
    for (const auto& f : all_families()) {
        double worst = 0.0;
        for (int e = -9; e <= -1; ++e)
            for (double m = 1.0; m < 10.0; m += 0.25) {
                const double p = m * std::pow(10.0, e);
                if (p >= 0.5) continue;
                worst = std::max(worst, std::abs(link_cdf(f, link_quantile(f, p)) - p));
                worst = std::max(worst, std::abs(link_cdf(f, link_quantile(f, 1.0 - p)) - (1.0 - p)));
            }
        for (double p = 0.001; p < 1.0; p += 0.001) worst = std::max(worst, std::abs(link_cdf(f, link_quantile(f, p)) - p));
        CAPTURE(f.name());
        CAPTURE(f.power());
        CHECK(worst < 1e-10);
    }
}

TEST_CASE("link quantile is strictly increasing") {
    for (const auto& f : all_families()) {
        double prev = -std::numeric_limits<double>::infinity();
        for (double p = 1e-6; p < 1.0; p += 0.0037) {
            const double z = link_quantile(f, p);
            CHECK(z > prev);
            prev = z;
        }
    }
}

TEST_CASE("exponential-power 2 coincides with the normal on [-8, 8]") {
    const auto ep2 = LinkFamily::exponential_power(2.0);
    double worst_cdf = 0.0;
    double worst_q = 0.0;
    for (double z = -8.0; z <= 8.0; z += 0.01) {
        worst_cdf = std::max(worst_cdf, std::abs(link_cdf(ep2, z) - normal_cdf(z)));
        const double p = normal_cdf(z);
        if (p > 0.0 && p < 1.0 - 1e-15) worst_q = std::max(worst_q, std::abs(link_quantile(ep2, p) - normal_quantile(p)));
    }
    CHECK(worst_cdf < 1e-10);
    CHECK(worst_q < 1e-10);
}

TEST_CASE("link cdf is nondecreasing on sorted grids") {
    for (const auto& f : all_families()) {
        double prev = 0.0;
        for (double z = -30.0; z <= 30.0; z += 0.003) {
            const double v = link_cdf(f, z);
            CHECK_MESSAGE(v >= prev, f.name(), " ", f.power(), " at ", z);
            prev = v;
        }
    }
}

TEST_CASE("inverse-transform sample variance matches link variance") {
    const int n = 1000000;
    for (double eta : {0.5, 1.0, 2.0, 4.0, 40.0}) {
        const auto f = LinkFamily::exponential_power(eta);
        CounterRng rng(2024, static_cast<std::uint64_t>(eta * 10));
        double s2 = 0.0;
        double s4 = 0.0;
        double s1 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double z = link_quantile(f, rng.uniform());
            s1 += z;
            s2 += z * z;
            s4 += z * z * z * z;
        }
        const double var = s2 / n - (s1 / n) * (s1 / n);
        const double se = std::sqrt((s4 / n - (s2 / n) * (s2 / n)) / n);
        CAPTURE(eta);
        CHECK(std::abs(var - link_variance(f)) < 3.0 * se);
    }
}

TEST_CASE("log cdf and log pdf agree with their exponentiated forms") {
    for (const auto& f : all_families())
        for (double z : {-6.0, -1.2, 0.0, 0.4, 3.3}) {
            CHECK(std::exp(link_log_cdf(f, z)) == doctest::Approx(link_cdf(f, z)).epsilon(1e-12));
            CHECK(link_pdf(f, z) == doctest::Approx(std::exp(link_log_pdf(f, z))).epsilon(1e-15));
        }
    // Density is the derivative of the cdf.
    for (const auto& f : all_families())
        for (double z : {-2.1, -0.3, 0.7, 1.9}) {
            const double h = 1e-5;
            CHECK((link_cdf(f, z + h) - link_cdf(f, z - h)) / (2 * h) == doctest::Approx(link_pdf(f, z)).epsilon(1e-6));
        }
}

TEST_CASE("steep exponential-power cdf stays linear near the origin") {
    for (double eta : {40.0, 64.0}) {
        const auto f = LinkFamily::exponential_power(eta);
        const double slope = link_pdf(f, 0.0);
        for (double z : {1e-12, 1e-8, 1e-6, 1e-5, 3e-5}) {
            CHECK(link_cdf(f, z) - 0.5 == doctest::Approx(z * slope).epsilon(1e-9));
            CHECK(0.5 - link_cdf(f, -z) == doctest::Approx(z * slope).epsilon(1e-9));
        }
    }
}

TEST_CASE("upper incomplete gamma from log x") {
    for (double a : {0.015625, 0.5, 2.0})
        for (double x : {1e-10, 0.3, 4.0, 30.0})
            CHECK(log_reg_upper_gamma_from_log(a, std::log(x)) == doctest::Approx(log_reg_upper_gamma(a, x)).epsilon(1e-14));
    // x = exp(-800) underflows; P(a, x) ~ x^a / Gamma(a + 1).
    const double a = 1.0 / 64.0;
    const double p = std::exp(-800.0 * a - std::lgamma(1.0 + a));
    CHECK(log_reg_upper_gamma_from_log(a, -800.0) == doctest::Approx(std::log1p(-p)).epsilon(1e-12));
}
