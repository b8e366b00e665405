#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "poolcast/conjugate_pairs.hpp"
#include "poolcast/distributions.hpp"
#include "poolcast/errors.hpp"

namespace poolcast {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Jointly normal information states x ~ N(mean, covariance) with
/// P(y = 1 | x) = F(intercept + coefficients . x).
template <typename Scalar>
struct InformationModelT {
    VectorX<Scalar> mean;
    MatrixX<Scalar> covariance;
    Scalar intercept{0};
    VectorX<Scalar> coefficients;

    Eigen::Index experts() const { return mean.size(); }
};

using InformationModel = InformationModelT<double>;

/// Throws DomainError unless sizes agree, the covariance is symmetric and
/// positive definite, and every coefficient is nonzero.
template <typename Scalar>
void validate(const InformationModelT<Scalar>& model) {
    using std::abs;
    const Eigen::Index k = model.mean.size();
    if (k < 1) throw DomainError("information model needs at least one expert");
    if (model.covariance.rows() != k || model.covariance.cols() != k || model.coefficients.size() != k)
        throw DomainError("information model dimensions disagree");
    for (Eigen::Index i = 0; i < k; ++i) {
        if (model.coefficients(i) == Scalar(0)) throw DomainError("information model coefficients must be nonzero");
        for (Eigen::Index j = 0; j < i; ++j)
            if (abs(model.covariance(i, j) - model.covariance(j, i)) > Scalar(1e-12))
                throw DomainError("information covariance is not symmetric");
    }
    Eigen::LLT<MatrixX<Scalar>> llt(model.covariance);
    if (llt.info() != Eigen::Success) throw DomainError("information covariance is not positive definite");
}

/// k exchangeable experts: common variance, correlation rho, coefficient and mean.
template <typename Scalar>
InformationModelT<Scalar> exchangeable_model(int k, Scalar rho, Scalar variance = Scalar(1),
                                             Scalar coefficient = Scalar(1), Scalar intercept = Scalar(0),
                                             Scalar mean = Scalar(0)) {
    if (k < 1) throw DomainError("exchangeable model needs k >= 1");
    if (k > 1 && !(rho > Scalar(-1) / Scalar(k - 1)))
        throw DomainError("exchangeable correlation must exceed -1/(k-1)");
    if (!(rho <= Scalar(1))) throw DomainError("correlation must be at most 1");
    InformationModelT<Scalar> m;
    m.mean = VectorX<Scalar>::Constant(k, mean);
    m.covariance = MatrixX<Scalar>::Constant(k, k, rho * variance);
    m.covariance.diagonal().setConstant(variance);
    m.intercept = intercept;
    m.coefficients = VectorX<Scalar>::Constant(k, coefficient);
    return m;
}

/// Closed-form weight of each of k exchangeable experts with correlation rho.
template <typename Scalar>
Scalar exchangeable_weight(int k, Scalar rho) {
    return Scalar(1) / (Scalar(k - 1) * rho + Scalar(1));
}

/// Ensemble weights and the variances of the normal noise added to the link
/// variable in each expert's calibrated marginal.
template <typename Scalar>
struct EnsembleWeightsT {
    Scalar beta0{0};
    VectorX<Scalar> beta;
    Scalar v0{0};
    VectorX<Scalar> v;
    Scalar m0{0};
};

using EnsembleWeights = EnsembleWeightsT<double>;

template <typename Scalar>
EnsembleWeightsT<Scalar> derive_weights(const InformationModelT<Scalar>& model) {
    using std::abs;
    validate(model);
    const Eigen::Index k = model.experts();
    const VectorX<Scalar>& a = model.coefficients;
    const MatrixX<Scalar>& s = model.covariance;

    EnsembleWeightsT<Scalar> w;
    w.beta.resize(k);
    w.v.resize(k);
    // (Sigma a)_i = sum_j a_j sigma_ij.
    const VectorX<Scalar> sa = s * a;
    w.v0 = a.dot(sa);
    w.m0 = model.intercept + a.dot(model.mean);
    for (Eigen::Index i = 0; i < k; ++i) {
        const Scalar denom = sa(i);
        if (abs(denom) <= Scalar(1e-14) * abs(a(i)) * s(i, i))
            throw DegenerateModel("weight denominator for expert " + std::to_string(i + 1) + " vanishes");
        w.beta(i) = a(i) * s(i, i) / denom;
        // Drop expert i: a'_{-i} Sigma_{-i,-i} a_{-i} = v0 - 2 a_i (Sigma a)_i + a_i^2 sigma_ii.
        const Scalar others = w.v0 - Scalar(2) * a(i) * sa(i) + a(i) * a(i) * s(i, i);
        const Scalar cross = sa(i) - a(i) * s(i, i);
        Scalar vi = others - cross * cross / s(i, i);
        if (vi < Scalar(0)) vi = Scalar(0);
        w.v(i) = vi;
    }
    w.beta0 = Scalar(1) - w.beta.sum();
    return w;
}

/// Information model equivalent to the normal/normal pair with private
/// samples only: x_i is expert i's sample sum.
InformationModel information_model_from_pair(const ConjugatePair& pair, const SampleDesign& design);

/// Generalized probit ensemble with the normal link (exact).
double aggregate_normal_link(const EnsembleWeights& weights, double p0, const ExpertReports& reports,
                             double clip_epsilon = 1e-9);

/// Exponential-power ensemble with moment-matched noise variances
/// v'_i = v_i / Var(EP(eta)).
double aggregate_ep_link(const EnsembleWeights& weights, double power, double p0, const ExpertReports& reports,
                         double clip_epsilon = 1e-9);

/// Same form for any standard link family; normal is exact, others are the
/// moment-matched approximation.
double aggregate_link(const EnsembleWeights& weights, const LinkFamily& family, double p0,
                      const ExpertReports& reports, double clip_epsilon = 1e-9);

/// Expert i's calibrated report for information state x_i under the model
/// (exact for the normal link, moment-matched otherwise).
double expert_report(const EnsembleWeights& weights, const LinkFamily& family, double mean_i, double coefficient_i,
                     Eigen::Index i, double x_i);

/// Prior-predictive P(y = 1) = F_{z0 + sqrt(v0) x0}(m0) under the same approximation.
double model_prior_predictive(const EnsembleWeights& weights, const LinkFamily& family);

/// Link + free intercept + per-expert slopes on link-transformed reports.
struct FittedAggregator {
    LinkFamily link = LinkFamily::normal();
    double intercept = 0.0;
    std::vector<std::string> names;
    Eigen::VectorXd coefficients;
    double clip_epsilon = 1e-9;

    void validate() const;
};

/// F(c + sum_i b_i F^{-1}(clip(p_i))).
double apply_fitted(const FittedAggregator& model, const ExpertReports& reports);
/// Checks that the caller's expert columns are exactly the model's before applying.
double apply_fitted(const FittedAggregator& model, const std::vector<std::string>& names,
                    const ExpertReports& reports);

/// Linear opinion pool; weights must lie on the simplex.
double lop(const Eigen::VectorXd& weights, const ExpertReports& reports);
double lop_equal(const ExpertReports& reports);
/// Karmarkar transform p^a / (p^a + (1-p)^a).
double klop(double a, double pool);
/// Beta(a, b) cdf of the pool.
double blop(double a, double b, double pool);
/// logistic(sum (a/k) logit p_i).
double logit_pool(double a, const ExpertReports& reports, double clip_epsilon = 1e-9);
/// logistic(sum w_i logit p_i) with separate per-expert weights.
double logit_pool_weighted(const Eigen::VectorXd& weights, const ExpertReports& reports,
                           double clip_epsilon = 1e-9);

}  // namespace poolcast
