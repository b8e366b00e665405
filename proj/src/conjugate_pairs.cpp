#include "poolcast/conjugate_pairs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "poolcast/errors.hpp"
#include "poolcast/special_functions.hpp"

namespace poolcast {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_positive(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) throw DomainError(std::string(what) + " must be positive and finite");
}

// Scale term v_n of each variant's closed form.
double scale_term(const ConjugatePair& pair, int n) {
    switch (pair.kind()) {
        case ConjugatePair::Kind::GammaPoisson: return -std::log1p(1.0 / (pair.beta() + n));
        case ConjugatePair::Kind::NormalNormal: {
            const double t0 = pair.tau0();
            return (t0 + n) * (t0 + n + 1.0) * pair.sd() * pair.sd();
        }
        case ConjugatePair::Kind::GenGammaGumbel: return 1.0 / (pair.alpha() + n);
        case ConjugatePair::Kind::BetaBernoulli: return pair.alpha() + pair.beta() + n;
    }
    return 0.0;
}

// Value F_n approaches at a domain boundary.
double boundary_limit(const ConjugatePair& pair, bool at_lower) {
    if (pair.kind() == ConjugatePair::Kind::GammaPoisson) return at_lower ? 1.0 : 0.0;
    return at_lower ? 0.0 : 1.0;
}

void require_kind(const ConjugatePair& pair, ConjugatePair::Kind kind, const char* op) {
    if (pair.kind() != kind) throw UnsupportedVariant(std::string(op) + " is not available for " + pair.name());
}

void require_matching(const SampleDesign& design, const ExpertReports& reports) {
    if (reports.size() != design.experts())
        throw SchemaError("report count " + std::to_string(reports.size()) + " does not match " +
                          std::to_string(design.experts()) + " experts in the design");
}

// Evaluates F_N at the combined statistic, enforcing or clamping the domain.
double evaluate_combined(const ConjugatePair& pair, int n, double t, const AggregationOptions& opts) {
    const StatisticDomain dom = statistic_domain(pair, n);
    if (dom.contains(t)) return predictive_prob(pair, n, t);
    const bool below = !(t > dom.lower);
    if (!opts.clamp_infeasible) {
        throw InfeasibleReports("combined statistic " + std::to_string(t) + " violates " +
                                (below ? "lower bound " + std::to_string(dom.lower)
                                       : "upper bound " + std::to_string(dom.upper)));
    }
    const double limit = boundary_limit(pair, below);
    return std::clamp(limit, opts.clip_epsilon, 1.0 - opts.clip_epsilon);
}

double log_choose(int n, int k) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

__extension__ using u128 = unsigned __int128;

u128 checked_mul(u128 a, u128 b) {
    u128 r;
    if (__builtin_mul_overflow(a, b, &r)) throw DomainError("exact enumeration overflowed 128-bit arithmetic");
    return r;
}

u128 checked_add(u128 a, u128 b) {
    u128 r;
    if (__builtin_add_overflow(a, b, &r)) throw DomainError("exact enumeration overflowed 128-bit arithmetic");
    return r;
}

u128 choose_exact(int n, int k) {
    u128 r = 1;
    for (int j = 1; j <= k; ++j) r = r * static_cast<u128>(n - k + j) / static_cast<u128>(j);
    return r;
}

// Rising factorial a (a+1) ... (a+m-1) for integer a.
u128 rising_exact(long a, int m) {
    u128 r = 1;
    for (int j = 0; j < m; ++j) r = checked_mul(r, static_cast<u128>(a + j));
    return r;
}

bool is_integer(double v) { return v == std::floor(v) && v < 1e6; }

}  // namespace

ConjugatePair ConjugatePair::beta_bernoulli(double alpha, double beta) {
    require_positive(alpha, "beta/bernoulli alpha");
    require_positive(beta, "beta/bernoulli beta");
    return ConjugatePair(Kind::BetaBernoulli, alpha, beta, 0.0);
}

ConjugatePair ConjugatePair::gamma_poisson(double shape, double rate) {
    require_positive(shape, "gamma/poisson shape");
    require_positive(rate, "gamma/poisson rate");
    return ConjugatePair(Kind::GammaPoisson, shape, rate, 0.0);
}

ConjugatePair ConjugatePair::normal_normal(double prior_mean, double prior_sd, double sd) {
    if (!std::isfinite(prior_mean)) throw DomainError("normal/normal prior mean must be finite");
    require_positive(prior_sd, "normal/normal prior sd");
    require_positive(sd, "normal/normal data sd");
    return ConjugatePair(Kind::NormalNormal, prior_mean, prior_sd, sd);
}

ConjugatePair ConjugatePair::gen_gamma_gumbel(double alpha, double beta, double scale) {
    require_positive(alpha, "generalized-gamma/gumbel alpha");
    require_positive(beta, "generalized-gamma/gumbel beta");
    require_positive(scale, "generalized-gamma/gumbel scale");
    return ConjugatePair(Kind::GenGammaGumbel, alpha, beta, scale);
}

std::string ConjugatePair::name() const {
    switch (kind_) {
        case Kind::BetaBernoulli: return "beta_bernoulli";
        case Kind::GammaPoisson: return "gamma_poisson";
        case Kind::NormalNormal: return "normal_normal";
        case Kind::GenGammaGumbel: return "gen_gamma_gumbel";
    }
    return "unknown";
}

double ConjugatePair::tau0() const {
    switch (kind_) {
        case Kind::BetaBernoulli: return a_ + b_ - 2.0;
        case Kind::GammaPoisson: return b_;
        case Kind::NormalNormal: return (c_ * c_) / (b_ * b_);
        case Kind::GenGammaGumbel: return a_;
    }
    return 0.0;
}

double ConjugatePair::tau1() const {
    switch (kind_) {
        case Kind::BetaBernoulli: return a_ - 1.0;
        case Kind::GammaPoisson: return a_ - 1.0;
        case Kind::NormalNormal: return (c_ * c_) * a_ / (b_ * b_);
        case Kind::GenGammaGumbel: return b_;
    }
    return 0.0;
}

SampleDesign::SampleDesign(std::vector<int> private_sizes, int shared_size)
    : private_(std::move(private_sizes)), shared_(shared_size), total_(0) {
    if (private_.empty()) throw DomainError("a sample design needs at least one expert");
    for (int n : private_) {
        if (n < 1) throw DomainError("private sample sizes must be >= 1");
        total_ += n;
    }
    if (shared_ < 0) throw DomainError("shared sample size must be >= 0");
}

ExpertReports::ExpertReports(Eigen::VectorXd values) : values_(std::move(values)) {
    if (values_.size() == 0) throw DomainError("at least one expert report is required");
    for (Eigen::Index i = 0; i < values_.size(); ++i) {
        const double p = values_(i);
        if (!(p >= 0.0 && p <= 1.0)) throw DomainError("report " + std::to_string(p) + " is not a probability");
    }
}

ExpertReports::ExpertReports(std::initializer_list<double> values)
    : ExpertReports(Eigen::Map<const Eigen::VectorXd>(values.begin(), static_cast<Eigen::Index>(values.size()))) {}

Eigen::VectorXd ExpertReports::clipped(double eps) const {
    return values_.cwiseMax(eps).cwiseMin(1.0 - eps);
}

StatisticDomain statistic_domain(const ConjugatePair& pair, int n) {
    switch (pair.kind()) {
        case ConjugatePair::Kind::BetaBernoulli: return {-1.0, pair.alpha() + pair.beta() + n - 1.0};
        case ConjugatePair::Kind::GammaPoisson: return {-1.0, kInf};
        case ConjugatePair::Kind::NormalNormal: return {-kInf, kInf};
        case ConjugatePair::Kind::GenGammaGumbel: return {0.0, kInf};
    }
    return {0.0, 0.0};
}

double prior_predictive(const ConjugatePair& pair) { return predictive_prob(pair, 0, pair.tau1()); }

double predictive_prob(const ConjugatePair& pair, int n, double t) {
    if (n < 0) throw DomainError("sample size must be >= 0");
    const StatisticDomain dom = statistic_domain(pair, n);
    if (!dom.contains(t) || std::isnan(t)) {
        throw DomainError("statistic " + std::to_string(t) + " outside (" + std::to_string(dom.lower) + ", " +
                          std::to_string(dom.upper) + ") for " + pair.name());
    }
    const double v = scale_term(pair, n);
    switch (pair.kind()) {
        case ConjugatePair::Kind::BetaBernoulli: return (t + 1.0) / v;
        case ConjugatePair::Kind::GammaPoisson: return std::exp(v * (t + 1.0));
        case ConjugatePair::Kind::NormalNormal: return normal_cdf(t / std::sqrt(v));
        case ConjugatePair::Kind::GenGammaGumbel: return std::exp((std::log(t) - std::log1p(t)) / v);
    }
    return 0.0;
}

double predictive_inverse(const ConjugatePair& pair, int n, double p) {
    if (n < 0) throw DomainError("sample size must be >= 0");
    if (!(p > 0.0 && p < 1.0)) throw DomainError("predictive inverse needs 0 < p < 1");
    const double v = scale_term(pair, n);
    switch (pair.kind()) {
        case ConjugatePair::Kind::BetaBernoulli: return v * p - 1.0;
        case ConjugatePair::Kind::GammaPoisson: return std::log(p) / v - 1.0;
        case ConjugatePair::Kind::NormalNormal: return std::sqrt(v) * normal_quantile(p);
        case ConjugatePair::Kind::GenGammaGumbel: {
            const double lp = v * std::log(p);
            return std::exp(lp) / -std::expm1(lp);
        }
    }
    return 0.0;
}

double aggregate_private(const ConjugatePair& pair, const SampleDesign& design, const ExpertReports& reports,
                         const AggregationOptions& opts) {
    require_matching(design, reports);
    if (design.shared_size() != 0)
        throw DomainError("aggregate_private needs a design without shared information");
    const Eigen::VectorXd p = reports.clipped(opts.clip_epsilon);
    const int k = design.experts();
    // F_0^{-1}(p_0) is tau1 exactly.
    double combined = -(k - 1) * pair.tau1();
    for (int i = 0; i < k; ++i) combined += predictive_inverse(pair, design.private_size(i), p(i));
    return evaluate_combined(pair, design.total_private(), combined, opts);
}

SharedMoments shared_statistic_moments(const ConjugatePair& pair, const SampleDesign& design,
                                       const ExpertReports& reports, const AggregationOptions& opts) {
    require_kind(pair, ConjugatePair::Kind::NormalNormal, "shared_statistic_moments");
    require_matching(design, reports);
    const int k = design.experts();
    const double ns = design.shared_size();
    const double var = pair.sd() * pair.sd();
    const double var0 = pair.prior_sd() * pair.prior_sd();
    const double theta0 = pair.prior_mean();
    const Eigen::VectorXd p = reports.clipped(opts.clip_epsilon);

    Eigen::VectorXd sizes(k);
    Eigen::VectorXd deduced(k);
    for (int i = 0; i < k; ++i) {
        const int n = design.private_size(i) + design.shared_size();
        sizes(i) = n;
        deduced(i) = predictive_inverse(pair, n, p(i)) - pair.tau1();
    }

    Eigen::MatrixXd v22 = var0 * sizes * sizes.transpose();
    v22.array() += ns * var;
    v22.diagonal() = sizes.array() * var + sizes.array().square() * var0;
    const Eigen::VectorXd v21 = (ns * var + ns * var0 * sizes.array()).matrix();
    const double v11 = ns * var + ns * ns * var0;

    const Eigen::LLT<Eigen::MatrixXd> llt(v22);
    if (llt.info() != Eigen::Success) throw DegenerateModel("shared-information covariance is not positive definite");
    const Eigen::VectorXd centered = deduced - theta0 * sizes;
    const double mean = ns * theta0 + v21.dot(llt.solve(centered));
    const double variance = std::max(0.0, v11 - v21.dot(llt.solve(v21)));
    return {mean, variance};
}

double aggregate_shared_normal(const ConjugatePair& pair, const SampleDesign& design, const ExpertReports& reports,
                               const AggregationOptions& opts) {
    const SharedMoments m = shared_statistic_moments(pair, design, reports, opts);
    const int k = design.experts();
    const Eigen::VectorXd p = reports.clipped(opts.clip_epsilon);
    double numerator = -(k - 1) * pair.tau1();
    for (int i = 0; i < k; ++i)
        numerator += predictive_inverse(pair, design.private_size(i) + design.shared_size(), p(i));
    numerator -= (k - 1) * m.mean;
    const double vn = scale_term(pair, design.total_private() + design.shared_size());
    const double spread = std::sqrt((k - 1.0) * (k - 1.0) * m.variance + vn);
    return normal_cdf(numerator / spread);
}

double aggregate_shared_enumerate(const ConjugatePair& pair, const SampleDesign& design,
                                  const ExpertReports& reports, const AggregationOptions& opts) {
    require_kind(pair, ConjugatePair::Kind::BetaBernoulli, "aggregate_shared_enumerate");
    require_matching(design, reports);
    if (design.shared_size() == 0) return aggregate_private(pair, design, reports, opts);

    const int k = design.experts();
    const int ns = design.shared_size();
    const Eigen::VectorXd p = reports.clipped(opts.clip_epsilon);

    // Deduce each expert's private-plus-shared count.
    std::vector<int> counts(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        const int n = design.private_size(i) + ns;
        const double s = predictive_inverse(pair, n, p(i)) - pair.tau1();
        const double rounded = std::round(s);
        if (std::abs(s - rounded) > opts.integer_tolerance || rounded < 0 || rounded > n) {
            throw InfeasibleReports("report " + std::to_string(reports[i]) + " of expert " + std::to_string(i + 1) +
                                    " does not correspond to a count in [0, " + std::to_string(n) + "]");
        }
        counts[static_cast<std::size_t>(i)] = static_cast<int>(rounded);
    }

    const int total = design.total_private() + ns;
    int count_sum = 0;
    for (int c : counts) count_sum += c;

    std::vector<double> log_weight;
    std::vector<double> value;
    for (int ts = 0; ts <= ns; ++ts) {
        double lw = log_choose(ns, ts);
        bool feasible = true;
        for (int i = 0; i < k && feasible; ++i) {
            const int ti = counts[static_cast<std::size_t>(i)] - ts;
            if (ti < 0 || ti > design.private_size(i)) feasible = false;
            else lw += log_choose(design.private_size(i), ti);
        }
        if (!feasible) continue;
        const int successes = count_sum - (k - 1) * ts;
        lw += std::lgamma(pair.alpha() + successes) + std::lgamma(pair.beta() + total - successes);
        log_weight.push_back(lw);
        value.push_back(predictive_prob(pair, total, pair.tau1() + successes));
    }
    if (log_weight.empty())
        throw InfeasibleReports("no shared count is consistent with all reports jointly");

    const double top = *std::max_element(log_weight.begin(), log_weight.end());
    double num = 0.0;
    double den = 0.0;
    for (std::size_t j = 0; j < log_weight.size(); ++j) {
        const double w = std::exp(log_weight[j] - top);
        num += w * value[j];
        den += w;
    }
    return num / den;
}

GaussHermiteRule gauss_hermite(int n) {
    if (n < 1) throw DomainError("Gauss-Hermite rule needs at least one node");
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i + 1 < n; ++i) {
        const double off = std::sqrt((i + 1) / 2.0);
        jacobi(i, i + 1) = off;
        jacobi(i + 1, i) = off;
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
    GaussHermiteRule rule;
    rule.nodes = solver.eigenvalues();
    rule.weights = std::sqrt(std::numbers::pi) * solver.eigenvectors().row(0).transpose().array().square();
    return rule;
}

double aggregate_shared_quadrature(const ConjugatePair& pair, const SampleDesign& design,
                                   const ExpertReports& reports, int nodes, const AggregationOptions& opts) {
    require_kind(pair, ConjugatePair::Kind::NormalNormal, "aggregate_shared_quadrature");
    require_matching(design, reports);
    const int k = design.experts();
    const int ns = design.shared_size();
    const int total = design.total_private() + ns;
    const Eigen::VectorXd p = reports.clipped(opts.clip_epsilon);

    double combined = -(k - 1) * pair.tau1();
    Eigen::VectorXd deduced(k);
    for (int i = 0; i < k; ++i) {
        const int n = design.private_size(i) + ns;
        const double inv = predictive_inverse(pair, n, p(i));
        combined += inv;
        deduced(i) = inv - pair.tau1();
    }
    auto integrand = [&](double ts) { return predictive_prob(pair, total, combined - (k - 1) * ts); };

    // No shared sample: t_s is identically zero.
    if (ns == 0) return integrand(0.0);

    // Joint law of (t_s, t_1 + t_s, ..., t_k + t_s) built entry by entry from
    // the exchangeable sample, then conditioned through its precision matrix.
    const double var = pair.sd() * pair.sd();
    const double var0 = pair.prior_sd() * pair.prior_sd();
    const double theta0 = pair.prior_mean();
    std::vector<std::vector<int>> membership(static_cast<std::size_t>(k + 1));
    // Index sets into one shared pool of observation ids.
    int next_id = 0;
    std::vector<int> shared_ids;
    for (int j = 0; j < ns; ++j) shared_ids.push_back(next_id++);
    membership[0] = shared_ids;
    for (int i = 0; i < k; ++i) {
        std::vector<int> ids = shared_ids;
        for (int j = 0; j < design.private_size(i); ++j) ids.push_back(next_id++);
        membership[static_cast<std::size_t>(i + 1)] = ids;
    }
    Eigen::MatrixXd joint(k + 1, k + 1);
    Eigen::VectorXd mean(k + 1);
    for (int a = 0; a <= k; ++a) {
        const auto& ia = membership[static_cast<std::size_t>(a)];
        mean(a) = theta0 * static_cast<double>(ia.size());
        for (int b = 0; b <= k; ++b) {
            const auto& ib = membership[static_cast<std::size_t>(b)];
            int common = 0;
            for (int x : ia)
                for (int y : ib) common += (x == y);
            // Cov(sum_a, sum_b) = |a n b| sd^2 + |a||b| sd0^2.
            joint(a, b) = common * var + static_cast<double>(ia.size() * ib.size()) * var0;
        }
    }
    const Eigen::MatrixXd precision = joint.ldlt().solve(Eigen::MatrixXd::Identity(k + 1, k + 1));
    const double cond_var = 1.0 / precision(0, 0);
    const double cond_mean =
        mean(0) - precision.row(0).tail(k).dot(deduced - mean.tail(k)) / precision(0, 0);

    if (!(cond_var > 1e-300)) return integrand(cond_mean);
    const GaussHermiteRule rule = gauss_hermite(nodes);
    const double width = std::sqrt(2.0 * cond_var);
    double acc = 0.0;
    for (int j = 0; j < nodes; ++j) acc += rule.weights(j) * integrand(cond_mean + width * rule.nodes(j));
    return acc / std::sqrt(std::numbers::pi);
}

double exact_posterior_oracle(const ConjugatePair& pair, const SampleDesign& design, const ExpertReports& reports,
                              double match_tolerance) {
    require_kind(pair, ConjugatePair::Kind::BetaBernoulli, "exact_posterior_oracle");
    require_matching(design, reports);
    const int k = design.experts();
    const int ns = design.shared_size();
    const int total = design.total_private() + ns;
    if (total > 25) throw DomainError("exact enumeration limited to 25 total observations");

    const double alpha = pair.alpha();
    const double beta = pair.beta();
    const bool rational = is_integer(alpha) && is_integer(beta);

    // Odometer over (t_s, t_1, ..., t_k).
    std::vector<int> limits(static_cast<std::size_t>(k + 1));
    limits[0] = ns;
    for (int i = 0; i < k; ++i) limits[static_cast<std::size_t>(i + 1)] = design.private_size(i);
    std::vector<int> state(static_cast<std::size_t>(k + 1), 0);

    u128 num_exact = 0;
    u128 den_exact = 0;
    long double num_float = 0.0L;
    long double den_float = 0.0L;
    bool any = false;

    for (;;) {
        const int ts = state[0];
        bool matches = true;
        int successes = ts;
        for (int i = 0; i < k; ++i) {
            const int ti = state[static_cast<std::size_t>(i + 1)];
            successes += ti;
            const double report = (alpha + ti + ts) / (alpha + beta + design.private_size(i) + ns);
            if (std::abs(report - reports[i]) > match_tolerance) {
                matches = false;
                break;
            }
        }
        if (matches) {
            any = true;
            if (rational) {
                u128 w = choose_exact(ns, ts);
                for (int i = 0; i < k; ++i)
                    w = checked_mul(w, choose_exact(design.private_size(i), state[static_cast<std::size_t>(i + 1)]));
                w = checked_mul(w, rising_exact(static_cast<long>(alpha), successes));
                w = checked_mul(w, rising_exact(static_cast<long>(beta), total - successes));
                num_exact = checked_add(num_exact, checked_mul(w, static_cast<u128>(static_cast<long>(alpha) + successes)));
                den_exact = checked_add(den_exact, checked_mul(w, static_cast<u128>(static_cast<long>(alpha + beta) + total)));
            } else {
                long double lw = std::lgamma(ns + 1.0L) - std::lgamma(ts + 1.0L) - std::lgamma(ns - ts + 1.0L);
                for (int i = 0; i < k; ++i) {
                    const int n = design.private_size(i);
                    const int t = state[static_cast<std::size_t>(i + 1)];
                    lw += std::lgamma(n + 1.0L) - std::lgamma(t + 1.0L) - std::lgamma(n - t + 1.0L);
                }
                lw += std::lgamma(alpha + successes + 0.0L) + std::lgamma(beta + total - successes + 0.0L);
                const long double w = std::exp(lw);
                num_float += w * (alpha + successes);
                den_float += w * (alpha + beta + total);
            }
        }
        // Advance.
        std::size_t d = 0;
        while (d < state.size() && state[d] == limits[d]) state[d++] = 0;
        if (d == state.size()) break;
        ++state[d];
    }
    if (!any) throw InfeasibleReports("no sample configuration reproduces the reports");
    if (rational) {
        return static_cast<double>(static_cast<long double>(num_exact) / static_cast<long double>(den_exact));
    }
    return static_cast<double>(num_float / den_float);
}

double aggregate_conjugate(const ConjugatePair& pair, const SampleDesign& design, const ExpertReports& reports,
                           const AggregationOptions& opts) {
    if (design.shared_size() == 0) return aggregate_private(pair, design, reports, opts);
    switch (pair.kind()) {
        case ConjugatePair::Kind::BetaBernoulli: return aggregate_shared_enumerate(pair, design, reports, opts);
        case ConjugatePair::Kind::NormalNormal: return aggregate_shared_normal(pair, design, reports, opts);
        default:
            throw UnsupportedVariant("shared-information aggregation has no closed form for " + pair.name());
    }
}

}  // namespace poolcast
