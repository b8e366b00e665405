#include <doctest.h>

#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "poolcast/errors.hpp"
#include "poolcast/scoring.hpp"
#include "poolcast/simulation.hpp"
#include "poolcast/special_functions.hpp"

using namespace poolcast;

namespace {

std::string to_bytes(const Dataset& d) {
    std::ostringstream out;
    write_dataset(out, d);
    return out.str();
}

// Groups rows by a predicted value (exactly, or into equal-width bins) and
// checks the outcome frequency of every well-populated group against the
// group's mean prediction. z <= 0 selects a Bonferroni bound holding the
// family-wise rate at that of a single 3-SE check.
void check_calibration(const Eigen::VectorXd& pred, const Eigen::VectorXi& y, int bins, double z) {
    std::map<long, std::pair<double, std::pair<double, double>>> groups;
    for (Eigen::Index r = 0; r < pred.size(); ++r) {
        const long key = bins > 0 ? static_cast<long>(std::min(pred(r) * bins, bins - 1.0)) : std::lround(pred(r) * 1e9);
        auto& g = groups[key];
        g.first += 1.0;
        g.second.first += pred(r);
        g.second.second += y(r);
    }
    if (z <= 0.0) {
        const auto m = static_cast<double>(groups.size());
        z = normal_quantile(1.0 - (1.0 - std::erf(3.0 / std::sqrt(2.0))) / (2.0 * m));
    }
    int checked = 0;
    for (const auto& [key, g] : groups) {
        const double n = g.first;
        if (n < 200) continue;
        const double mean_pred = g.second.first / n;
        const double freq = g.second.second / n;
        const double se = std::sqrt(std::max(mean_pred * (1 - mean_pred), 1e-6) / n);
        CAPTURE(mean_pred);
        CAPTURE(n);
        CHECK(std::abs(freq - mean_pred) < z * se);
        ++checked;
    }
    CHECK(checked >= 3);
}

}  // namespace

TEST_CASE("beta/Bernoulli worlds have the prior-predictive event rate") {
    const ConjugateGenerator gen{ConjugatePair::beta_bernoulli(1, 1), SampleDesign({2, 2})};
    const Dataset d = simulate_conjugate(gen, 100000, 1);
    const double mean = d.outcome.cast<double>().mean();
    CHECK(std::abs(mean - 0.5) < 3.0 * std::sqrt(0.25 / 100000));
    CHECK(d.experts == std::vector<std::string>{"e1", "e2"});
    CHECK(d.oracle_names == std::vector<std::string>{"bayes"});
}

TEST_CASE("exact conjugate aggregates are calibrated on simulated worlds") {
    SUBCASE("beta/Bernoulli private") {
        const Dataset d = simulate_conjugate({ConjugatePair::beta_bernoulli(2, 3), SampleDesign({2, 3})}, 100000, 2);
        check_calibration(d.oracle.col(0), d.outcome, 0, 3.0);
    }
    SUBCASE("beta/Bernoulli shared") {
        const Dataset d = simulate_conjugate({ConjugatePair::beta_bernoulli(1, 1), SampleDesign({1, 1}, 1)}, 100000, 3);
        check_calibration(d.oracle.col(0), d.outcome, 0, 3.0);
    }
    SUBCASE("gamma/Poisson private") {
        const Dataset d = simulate_conjugate({ConjugatePair::gamma_poisson(2, 1), SampleDesign({2, 2})}, 100000, 4);
        check_calibration(d.oracle.col(0), d.outcome, 10, 3.0);
    }
    SUBCASE("normal/normal shared") {
        const Dataset d = simulate_conjugate({ConjugatePair::normal_normal(-1.25, 1, 1), SampleDesign({1, 1}, 1)}, 100000, 5);
        check_calibration(d.oracle.col(0), d.outcome, 10, 3.0);
    }
    SUBCASE("Gumbel private") {
        const Dataset d = simulate_conjugate({ConjugatePair::gen_gamma_gumbel(2, 1.5, 1), SampleDesign({2, 1})}, 100000, 6);
        check_calibration(d.oracle.col(0), d.outcome, 10, 3.0);
    }
}

TEST_CASE("individual expert reports are calibrated") {
    const Dataset d = simulate_conjugate({ConjugatePair::normal_normal(0.3, 0.8, 1.2), SampleDesign({3, 1}, 2)}, 100000, 7);
    check_calibration(d.reports.col(0), d.outcome, 10, 0.0);
    check_calibration(d.reports.col(1), d.outcome, 10, 0.0);
    const Dataset g = simulate_conjugate({ConjugatePair::gen_gamma_gumbel(2, 1.5, 1), SampleDesign({1, 1}, 1)}, 50000, 8);
    CHECK(g.oracle.cols() == 0);
    check_calibration(g.reports.col(0), g.outcome, 10, 0.0);
}

TEST_CASE("normal/normal report mean matches an independent Monte Carlo oracle") {
    const Dataset d = simulate_conjugate({ConjugatePair::normal_normal(-1.25, 1, 1), SampleDesign({2})}, 100000, 9);
    const double sim_mean = d.reports.col(0).mean();

    // Posterior predictive of the next draw from scratch: mean m, variance s2 + s2_post.
    std::mt19937_64 eng(2024);
    std::normal_distribution<double> norm(0.0, 1.0);
    const int n = 200000;
    double acc = 0.0;
    double acc2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double theta = -1.25 + norm(eng);
        const double sum = 2 * theta + std::sqrt(2.0) * norm(eng);
        const double post_prec = 1.0 + 2.0;
        const double post_mean = (-1.25 + sum) / post_prec;
        const double pred_sd = std::sqrt(1.0 + 1.0 / post_prec);
        const double p = 0.5 * std::erfc(-(post_mean / pred_sd) / std::sqrt(2.0));
        acc += p;
        acc2 += p * p;
    }
    const double oracle = acc / n;
    const double sd = std::sqrt(acc2 / n - oracle * oracle);
    const double se = sd * std::sqrt(1.0 / n + 1.0 / 100000);
    CHECK(std::abs(sim_mean - oracle) < 3.0 * se);
}

TEST_CASE("latent worlds have the model's prior-predictive rate") {
    InformationModel m;
    m.mean = Eigen::Vector2d(0.2, -0.1);
    m.covariance = Eigen::Matrix2d{{0.7, 0.28}, {0.28, 0.7}};
    m.intercept = 0.3;
    m.coefficients = Eigen::Vector2d(0.8, 0.5);
    for (const LinkFamily& link : {LinkFamily::normal()}) {
        const Dataset d = simulate_latent({m, link}, 1000000, 10);
        const double p0 = model_prior_predictive(derive_weights(m), link);
        const double rate = d.outcome.cast<double>().mean();
        CHECK(std::abs(rate - p0) < 3.0 * std::sqrt(p0 * (1 - p0) / 1e6));
    }
}

TEST_CASE("probit ensemble is calibrated on latent worlds") {
    const LatentGenerator gen{exchangeable_model<double>(2, 0.5, 0.8, 1.0, -0.2), LinkFamily::normal()};
    const Dataset d = simulate_latent(gen, 200000, 11);
    check_calibration(d.oracle_column("ensemble"), d.outcome, 20, 3.0);
    check_calibration(d.reports.col(0), d.outcome, 20, 0.0);
    // Recomputed ensemble from the reports agrees with the emitted column.
    const EnsembleWeights w = derive_weights(gen.model);
    const double p0 = model_prior_predictive(w, gen.link);
    for (Eigen::Index r = 0; r < 100; ++r)
        CHECK(aggregate_normal_link(w, p0, ExpertReports(Eigen::VectorXd(d.reports.row(r).transpose()))) ==
              doctest::Approx(d.oracle(r, 1)).epsilon(1e-12));
}

TEST_CASE("simulations are seed-deterministic and worker-count independent") {
    const ConjugateGenerator conj{ConjugatePair::beta_bernoulli(2, 2), SampleDesign({1, 2}, 1)};
    CHECK(to_bytes(simulate_conjugate(conj, 9000, 12, {}, 1)) == to_bytes(simulate_conjugate(conj, 9000, 12, {}, 4)));
    CHECK(to_bytes(simulate_conjugate(conj, 500, 12)) != to_bytes(simulate_conjugate(conj, 500, 13)));
    const LatentGenerator lat{exchangeable_model<double>(3, 0.3), LinkFamily::exponential_power(4.0)};
    CHECK(to_bytes(simulate_latent(lat, 9000, 14, {}, 1)) == to_bytes(simulate_latent(lat, 9000, 14, {}, 3)));
}

TEST_CASE("emitted probabilities lie strictly inside (0, 1)") {
    const std::vector<ConjugateGenerator> gens{
        {ConjugatePair::beta_bernoulli(0.5, 0.7), SampleDesign({5, 5}, 3)},
        {ConjugatePair::gamma_poisson(1.5, 0.5), SampleDesign({4, 2})},
        {ConjugatePair::normal_normal(0.0, 1.0, 1.0), SampleDesign({3, 3}, 2)},
        {ConjugatePair::gen_gamma_gumbel(1.5, 2.0, 0.7), SampleDesign({2, 2, 2})}};
    for (const auto& g : gens) {
        const Dataset d = simulate_conjugate(g, 5000, 15);
        CHECK((d.reports.array() > 0.0).all());
        CHECK((d.reports.array() < 1.0).all());
    }
    const Dataset l = simulate_latent({exchangeable_model<double>(3, 0.6, 2.0), LinkFamily::normal()}, 5000, 16);
    CHECK((l.reports.array() > 0.0).all());
    CHECK((l.reports.array() < 1.0).all());
    // Light-tailed links may round to the endpoints but never leave [0, 1].
    const Dataset e = simulate_latent({exchangeable_model<double>(3, 0.6, 2.0), LinkFamily::exponential_power(9.0)}, 5000, 16);
    CHECK((e.reports.array() >= 0.0).all());
    CHECK((e.reports.array() <= 1.0).all());
}

TEST_CASE("shared information enlarges the anti-extremizing region") {
    const ConjugatePair pair = ConjugatePair::normal_normal(-1.25, 1, 1);
    const SampleDesign priv({2, 2});
    const SampleDesign shared({1, 1}, 1);
    const double p0 = prior_predictive(pair);
    int anti_private = 0;
    int anti_shared = 0;
    int violations = 0;
    for (int i = 1; i < 50; ++i)
        for (int j = 1; j < 50; ++j) {
            const double p1 = i / 50.0;
            const double p2 = j / 50.0;
            const ExpertReports rep{p1, p2};
            const double bar = rep.mean();
            auto anti = [&](double hat) {
                try {
                    return classify_extremizing(hat, bar, p0) == Extremizing::AntiExtremizes;
                } catch (const UndefinedClassification&) {
                    return false;
                }
            };
            const bool a_priv = anti(aggregate_private(pair, priv, rep));
            const bool a_shared = anti(aggregate_shared_normal(pair, shared, rep));
            anti_private += a_priv;
            anti_shared += a_shared;
            if (a_priv && !a_shared) ++violations;
        }
    CHECK(violations == 0);
    CHECK(anti_shared > anti_private);
}

TEST_CASE("private-design oracle equals the report-based aggregate") {
    const std::vector<ConjugateGenerator> gens{{ConjugatePair::beta_bernoulli(1.5, 2.5), SampleDesign({2, 3, 1})},
                                               {ConjugatePair::gamma_poisson(2.0, 1.0), SampleDesign({1, 2})},
                                               {ConjugatePair::normal_normal(0.4, 1.0, 1.5), SampleDesign({2, 2})},
                                               {ConjugatePair::gen_gamma_gumbel(2.0, 1.0, 1.0), SampleDesign({1, 3})}};
    for (const auto& g : gens) {
        const Dataset d = simulate_conjugate(g, 300, 18);
        for (Eigen::Index r = 0; r < d.rows(); ++r)
            CHECK(aggregate_private(g.pair, g.design, ExpertReports(Eigen::VectorXd(d.reports.row(r).transpose()))) ==
                  doctest::Approx(d.oracle(r, 0)).epsilon(1e-9));
    }
}

TEST_CASE("saturated reports are rejected") {
    const ConjugateGenerator extreme{ConjugatePair::normal_normal(0.0, 30.0, 0.1), SampleDesign({5})};
    CHECK_THROWS_AS(simulate_conjugate(extreme, 2000, 19), DomainError);
}

TEST_CASE("simulation configs validate") {
    SimConfig c{FittedGenerator{}, 0, 1, {}};
    CHECK_THROWS_AS(c.validate(), UsageError);
    CHECK_THROWS_AS(simulate_latent({exchangeable_model<double>(2, 0.2), LinkFamily::normal()}, 10, 1, {"only"}), UsageError);
}
