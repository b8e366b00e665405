#include "poolcast/gp_ensemble.hpp"

#include <algorithm>
#include <cmath>

#include "poolcast/special_functions.hpp"

namespace poolcast {

namespace {

// Scale factor sqrt(1 + v') of the noisy link variable z0 + sqrt(v) x0.
double noise_scale(const LinkFamily& family, double v) { return std::sqrt(1.0 + v / link_variance(family)); }

double clip(double p, double eps) { return std::clamp(p, eps, 1.0 - eps); }

}  // namespace

InformationModel information_model_from_pair(const ConjugatePair& pair, const SampleDesign& design) {
    if (pair.kind() != ConjugatePair::Kind::NormalNormal)
        throw UnsupportedVariant("information model bridge needs the normal/normal pair");
    if (design.shared_size() != 0) throw DomainError("information model bridge covers private samples only");
    const int k = design.experts();
    const double var = pair.sd() * pair.sd();
    const double var0 = pair.prior_sd() * pair.prior_sd();
    Eigen::VectorXd n(k);
    for (int i = 0; i < k; ++i) n(i) = design.private_size(i);

    // v_N of F_N(t) = Phi(t / sqrt(v_N)) at the pooled sample size.
    const double t0 = pair.tau0();
    const double total = design.total_private();
    const double scale = std::sqrt((t0 + total) * (t0 + total + 1.0) * var);

    InformationModel m;
    m.mean = pair.prior_mean() * n;
    m.covariance = var0 * n * n.transpose();
    m.covariance.diagonal() += var * n;
    m.intercept = pair.tau1() / scale;
    m.coefficients = Eigen::VectorXd::Constant(k, 1.0 / scale);
    return m;
}

double aggregate_link(const EnsembleWeights& weights, const LinkFamily& family, double p0,
                      const ExpertReports& reports, double clip_epsilon) {
    if (reports.size() != weights.beta.size())
        throw SchemaError("report count does not match the ensemble weights");
    double eta = weights.beta0 * noise_scale(family, weights.v0) * link_quantile(family, clip(p0, clip_epsilon));
    for (Eigen::Index i = 0; i < reports.size(); ++i)
        eta += weights.beta(i) * noise_scale(family, weights.v(i)) * link_quantile(family, clip(reports[i], clip_epsilon));
    return link_cdf(family, eta);
}

double aggregate_normal_link(const EnsembleWeights& weights, double p0, const ExpertReports& reports,
                             double clip_epsilon) {
    return aggregate_link(weights, LinkFamily::normal(), p0, reports, clip_epsilon);
}

double aggregate_ep_link(const EnsembleWeights& weights, double power, double p0, const ExpertReports& reports,
                         double clip_epsilon) {
    return aggregate_link(weights, LinkFamily::exponential_power(power), p0, reports, clip_epsilon);
}

double expert_report(const EnsembleWeights& weights, const LinkFamily& family, double mean_i, double coefficient_i,
                     Eigen::Index i, double x_i) {
    const double u = weights.m0 + coefficient_i * (x_i - mean_i) / weights.beta(i);
    return link_cdf(family, u / noise_scale(family, weights.v(i)));
}

double model_prior_predictive(const EnsembleWeights& weights, const LinkFamily& family) {
    return link_cdf(family, weights.m0 / noise_scale(family, weights.v0));
}

void FittedAggregator::validate() const {
    if (!(clip_epsilon > 0.0 && clip_epsilon < 0.5)) throw DomainError("clip epsilon must lie in (0, 0.5)");
    if (static_cast<Eigen::Index>(names.size()) != coefficients.size())
        throw SchemaError("coefficient names and values differ in count");
}

double apply_fitted(const FittedAggregator& model, const ExpertReports& reports) {
    if (reports.size() != model.coefficients.size())
        throw SchemaError("model has " + std::to_string(model.coefficients.size()) + " coefficients but " +
                          std::to_string(reports.size()) + " reports were given");
    double eta = model.intercept;
    for (Eigen::Index i = 0; i < reports.size(); ++i)
        eta += model.coefficients(i) * link_quantile(model.link, clip(reports[i], model.clip_epsilon));
    return link_cdf(model.link, eta);
}

double apply_fitted(const FittedAggregator& model, const std::vector<std::string>& names,
                    const ExpertReports& reports) {
    if (names != model.names) throw SchemaError("expert columns do not match the model's coefficient names");
    return apply_fitted(model, reports);
}

double lop(const Eigen::VectorXd& weights, const ExpertReports& reports) {
    if (weights.size() != reports.size()) throw SchemaError("pool weights and reports differ in length");
    if ((weights.array() < 0.0).any() || std::abs(weights.sum() - 1.0) > 1e-9)
        throw DomainError("pool weights must lie on the probability simplex");
    return weights.dot(reports.values());
}

double lop_equal(const ExpertReports& reports) { return reports.mean(); }

double klop(double a, double pool) {
    if (!(a > 0.0)) throw DomainError("Karmarkar exponent must be positive");
    if (!(pool > 0.0 && pool < 1.0)) throw DomainError("Karmarkar transform needs 0 < pool < 1");
    // logistic(a logit p) avoids overflow of p^a for large a.
    const double z = a * (std::log(pool) - std::log1p(-pool));
    return 1.0 / (1.0 + std::exp(-z));
}

double blop(double a, double b, double pool) {
    if (!(a > 0.0) || !(b > 0.0)) throw DomainError("beta transform shapes must be positive");
    return reg_inc_beta(a, b, pool);
}

double logit_pool(double a, const ExpertReports& reports, double clip_epsilon) {
    if (!(a > 0.0)) throw DomainError("logit pool scale must be positive");
    const Eigen::Index k = reports.size();
    return logit_pool_weighted(Eigen::VectorXd::Constant(k, a / static_cast<double>(k)), reports, clip_epsilon);
}

double logit_pool_weighted(const Eigen::VectorXd& weights, const ExpertReports& reports, double clip_epsilon) {
    if (weights.size() != reports.size()) throw SchemaError("logit weights and reports differ in length");
    double z = 0.0;
    for (Eigen::Index i = 0; i < reports.size(); ++i) {
        const double p = clip(reports[i], clip_epsilon);
        z += weights(i) * (std::log(p) - std::log1p(-p));
    }
    return 1.0 / (1.0 + std::exp(-z));
}

}  // namespace poolcast
