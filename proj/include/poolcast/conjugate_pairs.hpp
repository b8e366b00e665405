#pragma once

#include <initializer_list>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace poolcast {

/// Prior/likelihood pair from a one-parameter exponential family, with its
/// event set A fixed per variant:
///   BetaBernoulli   Beta(alpha, beta) prior on a Bernoulli rate,    A = {1}
///   GammaPoisson    Ga(alpha, beta) prior on a Poisson rate,         A = {0}
///   NormalNormal    N(theta0, sd0^2) prior on a normal mean (sd),    A = (0, inf)
///   GenGammaGumbel  exp(theta/scale) ~ Ga(alpha, beta), Gumbel data, A = (-inf, 0)
class ConjugatePair {
public:
    enum class Kind { BetaBernoulli, GammaPoisson, NormalNormal, GenGammaGumbel };

    static ConjugatePair beta_bernoulli(double alpha, double beta);
    static ConjugatePair gamma_poisson(double shape, double rate);
    static ConjugatePair normal_normal(double prior_mean, double prior_sd, double sd);
    static ConjugatePair gen_gamma_gumbel(double alpha, double beta, double scale);

    Kind kind() const noexcept { return kind_; }
    std::string name() const;

    // BetaBernoulli, GammaPoisson, GenGammaGumbel.
    double alpha() const noexcept { return a_; }
    double beta() const noexcept { return b_; }
    // NormalNormal.
    double prior_mean() const noexcept { return a_; }
    double prior_sd() const noexcept { return b_; }
    // NormalNormal data sd, GenGammaGumbel scale.
    double sd() const noexcept { return c_; }
    double scale() const noexcept { return c_; }

    /// Natural hyperparameters of the conjugate prior.
    double tau0() const;
    double tau1() const;

private:
    ConjugatePair(Kind kind, double a, double b, double c) : kind_(kind), a_(a), b_(b), c_(c) {}
    Kind kind_;
    double a_;
    double b_;
    double c_;
};

/// Private sample sizes n_1..n_k and the shared sample size n_s.
class SampleDesign {
public:
    SampleDesign(std::vector<int> private_sizes, int shared_size = 0);

    int experts() const noexcept { return static_cast<int>(private_.size()); }
    int private_size(int i) const { return private_.at(static_cast<std::size_t>(i)); }
    const std::vector<int>& private_sizes() const noexcept { return private_; }
    int shared_size() const noexcept { return shared_; }
    /// N_k, the pooled private sample size.
    int total_private() const noexcept { return total_; }

private:
    std::vector<int> private_;
    int shared_;
    int total_;
};

/// Expert probabilities p_1..p_k. Stored as given (must lie in [0, 1]); the
/// aggregators clip to [eps, 1 - eps] before inverting.
class ExpertReports {
public:
    explicit ExpertReports(Eigen::VectorXd values);
    ExpertReports(std::initializer_list<double> values);

    Eigen::Index size() const noexcept { return values_.size(); }
    double operator[](Eigen::Index i) const { return values_(i); }
    const Eigen::VectorXd& values() const noexcept { return values_; }
    Eigen::VectorXd clipped(double eps) const;
    double mean() const { return values_.mean(); }

private:
    Eigen::VectorXd values_;
};

struct AggregationOptions {
    double clip_epsilon = 1e-9;
    /// Out-of-domain combined statistics return the nearer limit clipped to
    /// [eps, 1 - eps] instead of raising InfeasibleReports.
    bool clamp_infeasible = false;
    /// Absolute tolerance for snapping inverted reports to integer counts.
    double integer_tolerance = 1e-9;
};

/// Open interval of valid arguments t of F_n.
struct StatisticDomain {
    double lower;
    double upper;
    bool contains(double t) const { return t > lower && t < upper; }
};

StatisticDomain statistic_domain(const ConjugatePair& pair, int n);

/// F_0(tau1), everyone's prior-predictive event probability.
double prior_predictive(const ConjugatePair& pair);

/// Predictive generating function F_n(t).
double predictive_prob(const ConjugatePair& pair, int n, double t);

/// F_n^{-1}(p).
double predictive_inverse(const ConjugatePair& pair, int n, double p);

/// Bayesian ensemble with private information only (n_s = 0).
double aggregate_private(const ConjugatePair& pair, const SampleDesign& design, const ExpertReports& reports,
                         const AggregationOptions& opts = {});

/// Conditional moments of the shared statistic t_s given the reports
/// (NormalNormal only).
struct SharedMoments {
    double mean;
    double variance;
};

SharedMoments shared_statistic_moments(const ConjugatePair& pair, const SampleDesign& design,
                                       const ExpertReports& reports, const AggregationOptions& opts = {});

/// Closed-form probit ensemble with private and shared information.
double aggregate_shared_normal(const ConjugatePair& pair, const SampleDesign& design, const ExpertReports& reports,
                               const AggregationOptions& opts = {});

/// Exact finite mixture over the shared count (BetaBernoulli only).
double aggregate_shared_enumerate(const ConjugatePair& pair, const SampleDesign& design,
                                  const ExpertReports& reports, const AggregationOptions& opts = {});

/// Gauss-Hermite evaluation of the shared-information mixture for
/// NormalNormal. Conditional moments come from the joint precision matrix,
/// a separate algebraic route from aggregate_shared_normal.
double aggregate_shared_quadrature(const ConjugatePair& pair, const SampleDesign& design,
                                   const ExpertReports& reports, int nodes = 64,
                                   const AggregationOptions& opts = {});

/// Direct Bayes over every count configuration of the exchangeable sample
/// (BetaBernoulli, N_k + n_s <= 25). Rational arithmetic when alpha and beta
/// are integers; long double otherwise.
double exact_posterior_oracle(const ConjugatePair& pair, const SampleDesign& design, const ExpertReports& reports,
                              double match_tolerance = 1e-9);

/// Routes to the exact aggregator for the design: private, enumerated, or
/// closed-form normal. Throws UnsupportedVariant otherwise.
double aggregate_conjugate(const ConjugatePair& pair, const SampleDesign& design, const ExpertReports& reports,
                           const AggregationOptions& opts = {});

struct GaussHermiteRule {
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;
};

/// Physicists' Gauss-Hermite rule (weight exp(-x^2)) by Golub-Welsch.
GaussHermiteRule gauss_hermite(int n);

}  // namespace poolcast
