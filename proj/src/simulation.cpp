#include "poolcast/simulation.hpp"

#include <cmath>
#include <limits>
#include <optional>

#include <Eigen/Cholesky>

#include "poolcast/errors.hpp"
#include "poolcast/parallel.hpp"
#include "poolcast/random.hpp"

namespace poolcast {

namespace {

constexpr Eigen::Index kBlock = 4096;

std::vector<std::string> default_names(std::vector<std::string> names, Eigen::Index k) {
    if (names.empty())
        for (Eigen::Index i = 0; i < k; ++i) names.push_back("e" + std::to_string(i + 1));
    if (static_cast<Eigen::Index>(names.size()) != k)
        throw UsageError("expected " + std::to_string(k) + " expert names, got " + std::to_string(names.size()));
    return names;
}

void check_rows(Eigen::Index rows) {
    if (rows < 1) throw UsageError("row count must be at least 1");
}

// Generates rows in fixed blocks; each row draws from its own substream.
template <typename RowFn>
void generate_rows(Eigen::Index rows, int jobs, RowFn&& fn) {
    const auto blocks = static_cast<std::size_t>((rows + kBlock - 1) / kBlock);
    parallel_for(blocks, jobs, [&](std::size_t b) {
        const Eigen::Index begin = static_cast<Eigen::Index>(b) * kBlock;
        const Eigen::Index end = std::min(rows, begin + kBlock);
        for (Eigen::Index r = begin; r < end; ++r) fn(r);
    });
}

// Parameter theta and the sufficient-statistic contribution of n draws.
struct ConjugateSampler {
    const ConjugatePair& pair;

    double theta(CounterRng& rng) const {
        switch (pair.kind()) {
            case ConjugatePair::Kind::BetaBernoulli: return rng.beta(pair.alpha(), pair.beta());
            case ConjugatePair::Kind::GammaPoisson: return rng.gamma(pair.alpha(), pair.beta());
            case ConjugatePair::Kind::NormalNormal: return pair.prior_mean() + pair.prior_sd() * rng.normal();
            case ConjugatePair::Kind::GenGammaGumbel:
                return pair.scale() * std::log(rng.gamma(pair.alpha(), pair.beta()));
        }
        return 0.0;
    }

    double draw(double theta, CounterRng& rng) const {
        switch (pair.kind()) {
            case ConjugatePair::Kind::BetaBernoulli: return rng.bernoulli(theta) ? 1.0 : 0.0;
            case ConjugatePair::Kind::GammaPoisson: return static_cast<double>(rng.poisson(theta));
            case ConjugatePair::Kind::NormalNormal: return theta + pair.sd() * rng.normal();
            case ConjugatePair::Kind::GenGammaGumbel:
                return theta - pair.scale() * std::log(-std::log(rng.uniform()));
        }
        return 0.0;
    }

    double statistic(double x) const {
        return pair.kind() == ConjugatePair::Kind::GenGammaGumbel ? std::exp(-x / pair.scale()) : x;
    }

    double sample_statistic(double theta, int n, CounterRng& rng) const {
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += statistic(draw(theta, rng));
        return s;
    }

    bool in_event(double x) const {
        switch (pair.kind()) {
            case ConjugatePair::Kind::BetaBernoulli: return x == 1.0;
            case ConjugatePair::Kind::GammaPoisson: return x == 0.0;
            case ConjugatePair::Kind::NormalNormal: return x > 0.0;
            case ConjugatePair::Kind::GenGammaGumbel: return x < 0.0;
        }
        return false;
    }
};

bool has_exact_aggregate(const ConjugateGenerator& gen) {
    if (gen.design.shared_size() == 0) return true;
    return gen.pair.kind() == ConjugatePair::Kind::BetaBernoulli ||
           gen.pair.kind() == ConjugatePair::Kind::NormalNormal;
}

}  // namespace

void SimConfig::validate() const {
    check_rows(rows);
    std::visit(
        [](const auto& g) {
            using G = std::decay_t<decltype(g)>;
            if constexpr (std::is_same_v<G, LatentGenerator>) {
                poolcast::validate(g.model);
            } else if constexpr (std::is_same_v<G, FittedGenerator>) {
                g.truth.validate();
            }
        },
        generator);
}

Dataset simulate_conjugate(const ConjugateGenerator& gen, Eigen::Index rows, std::uint64_t seed,
                           std::vector<std::string> names, int jobs) {
    check_rows(rows);
    const int k = gen.design.experts();
    Dataset d;
    d.experts = default_names(std::move(names), k);
    d.outcome.resize(rows);
    d.reports.resize(rows, k);
    const bool with_oracle = has_exact_aggregate(gen);
    if (with_oracle) d.oracle_names = {"bayes"};
    d.oracle.resize(rows, with_oracle ? 1 : 0);

    const ConjugateSampler sampler{gen.pair};
    const CounterRng root = CounterRng(seed).substream("conjugate");
    const double tau1 = gen.pair.tau1();
    const bool pooled = gen.design.shared_size() == 0;
    AggregationOptions exact;
    exact.clip_epsilon = std::numeric_limits<double>::min();
    generate_rows(rows, jobs, [&](Eigen::Index r) {
        CounterRng rng = root.substream(static_cast<std::uint64_t>(r));
        const double theta = sampler.theta(rng);
        const double shared = sampler.sample_statistic(theta, gen.design.shared_size(), rng);
        double pooled_stat = tau1;
        Eigen::VectorXd p(k);
        for (int i = 0; i < k; ++i) {
            const int n = gen.design.private_size(i);
            const double own = sampler.sample_statistic(theta, n, rng);
            pooled_stat += own;
            p(i) = predictive_prob(gen.pair, n + gen.design.shared_size(), tau1 + own + shared);
            if (!(p(i) > 0.0 && p(i) < 1.0))
                throw DomainError("report of expert " + std::to_string(i + 1) + " in row " + std::to_string(r + 1) +
                                  " saturates at 0 or 1; the configuration is too extreme for double precision");
        }
        d.reports.row(r) = p.transpose();
        d.outcome(r) = sampler.in_event(sampler.draw(theta, rng)) ? 1 : 0;
        if (!with_oracle) return;
        // With private samples only, the reports reveal every statistic, so
        // the aggregate is the predictive given the pooled sample.
        d.oracle(r, 0) = pooled ? predictive_prob(gen.pair, gen.design.total_private(), pooled_stat)
                                : aggregate_conjugate(gen.pair, gen.design, ExpertReports(p), exact);
    });
    return d;
}

Dataset simulate_latent(const LatentGenerator& gen, Eigen::Index rows, std::uint64_t seed,
                        std::vector<std::string> names, int jobs) {
    check_rows(rows);
    const EnsembleWeights w = derive_weights(gen.model);
    const Eigen::Index k = gen.model.experts();
    const Eigen::MatrixXd chol = gen.model.covariance.llt().matrixL();
    const double p0 = model_prior_predictive(w, gen.link);

    Dataset d;
    d.experts = default_names(std::move(names), k);
    d.outcome.resize(rows);
    d.reports.resize(rows, k);
    d.oracle_names = {"truth", "ensemble"};
    d.oracle.resize(rows, 2);

    const CounterRng root = CounterRng(seed).substream("latent");
    generate_rows(rows, jobs, [&](Eigen::Index r) {
        CounterRng rng = root.substream(static_cast<std::uint64_t>(r));
        Eigen::VectorXd z(k);
        for (Eigen::Index i = 0; i < k; ++i) z(i) = rng.normal();
        const Eigen::VectorXd x = gen.model.mean + chol * z;
        Eigen::VectorXd p(k);
        for (Eigen::Index i = 0; i < k; ++i) {
            p(i) = expert_report(w, gen.link, gen.model.mean(i), gen.model.coefficients(i), i, x(i));
            // Light-tailed links round to exactly 0 or 1 in double precision far
            // out; downstream fits clip, so only invalid values are errors.
            if (!(p(i) >= 0.0 && p(i) <= 1.0))
                throw DomainError("report of expert " + std::to_string(i + 1) + " in row " + std::to_string(r + 1) +
                                  " is not a probability");
        }
        const double truth = link_cdf(gen.link, gen.model.intercept + gen.model.coefficients.dot(x));
        d.reports.row(r) = p.transpose();
        d.outcome(r) = rng.bernoulli(truth) ? 1 : 0;
        d.oracle(r, 0) = truth;
        d.oracle(r, 1) = aggregate_link(w, gen.link, p0, ExpertReports(p));
    });
    return d;
}

Dataset simulate_fitted(const FittedGenerator& gen, Eigen::Index rows, std::uint64_t seed,
                        std::vector<std::string> names, int jobs) {
    check_rows(rows);
    gen.truth.validate();
    const Eigen::Index k = gen.truth.coefficients.size();
    Dataset d;
    d.experts = default_names(std::move(names), k);
    d.outcome.resize(rows);
    d.reports.resize(rows, k);
    d.oracle_names = {"truth"};
    d.oracle.resize(rows, 1);

    const CounterRng root = CounterRng(seed).substream("fitted");
    generate_rows(rows, jobs, [&](Eigen::Index r) {
        CounterRng rng = root.substream(static_cast<std::uint64_t>(r));
        Eigen::VectorXd p(k);
        for (Eigen::Index i = 0; i < k; ++i) p(i) = rng.uniform();
        const double truth = apply_fitted(gen.truth, ExpertReports(p));
        d.reports.row(r) = p.transpose();
        d.outcome(r) = rng.bernoulli(truth) ? 1 : 0;
        d.oracle(r, 0) = truth;
    });
    return d;
}

Dataset simulate(const SimConfig& config, int jobs) {
    config.validate();
    return std::visit(
        [&](const auto& g) -> Dataset {
            using G = std::decay_t<decltype(g)>;
            if constexpr (std::is_same_v<G, ConjugateGenerator>)
                return simulate_conjugate(g, config.rows, config.seed, config.names, jobs);
            else if constexpr (std::is_same_v<G, LatentGenerator>)
                return simulate_latent(g, config.rows, config.seed, config.names, jobs);
            else
                return simulate_fitted(g, config.rows, config.seed, config.names, jobs);
        },
        config.generator);
}

}  // namespace poolcast
