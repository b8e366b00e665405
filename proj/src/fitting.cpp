#include "poolcast/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <set>
#include <sstream>

#include "poolcast/errors.hpp"
#include "poolcast/parallel.hpp"
#include "poolcast/random.hpp"
#include "poolcast/scoring.hpp"
#include "poolcast/special_functions.hpp"

namespace poolcast {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kScalarUpper = 100.0;
constexpr double kScalarLower = 1e-6;
/// Mean loss this close to zero on two-class data only happens when the
/// coefficients run off to infinity.
constexpr double kSeparationLoss = 1e-6;

double logit(double p) { return std::log(p) - std::log1p(-p); }

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

Eigen::MatrixXd clip_matrix(const Eigen::MatrixXd& p, double eps) { return p.cwiseMax(eps).cwiseMin(1.0 - eps); }

Eigen::MatrixXd glm_design(const LinkFamily& link, const Eigen::MatrixXd& reports, double eps) {
    Eigen::MatrixXd z(reports.rows(), reports.cols() + 1);
    z.col(0).setOnes();
    for (Eigen::Index j = 0; j < reports.cols(); ++j)
        for (Eigen::Index r = 0; r < reports.rows(); ++r)
            z(r, j + 1) = link_quantile(link, std::clamp(reports(r, j), eps, 1.0 - eps));
    return z;
}

struct StartPlan {
    std::vector<Eigen::VectorXd> fixed;
    double perturbation;
};

struct MultiStartResult {
    OptimizerResult best;
    bool any_converged = false;
    bool any_diverged = false;
    double diverged_value = kInf;
};

// Runs the optimizer from each planned start. Stops early once two converged
// runs agree on the objective.
MultiStartResult multi_start(const Objective& f, const StartPlan& plan, const FitOptions& opts, CounterRng rng,
                             double divergence_bound) {
    OptimizerOptions oo;
    oo.gradient_tolerance = opts.gradient_tolerance;
    oo.max_iterations = opts.max_iterations;
    oo.divergence_bound = divergence_bound;

    MultiStartResult out;
    std::vector<double> converged_values;
    bool have_best = false;
    for (int s = 0; s < opts.restarts; ++s) {
        Eigen::VectorXd x0;
        if (static_cast<std::size_t>(s) < plan.fixed.size()) {
            x0 = plan.fixed[static_cast<std::size_t>(s)];
        } else {
            x0 = plan.fixed.back();
            for (Eigen::Index j = 0; j < x0.size(); ++j) x0(j) += plan.perturbation * rng.normal();
        }
        OptimizerResult r = minimize_bfgs(f, x0, oo);
        if (r.diverged) {
            out.any_diverged = true;
            out.diverged_value = std::min(out.diverged_value, r.value);
            continue;
        }
        const bool better = !have_best || (r.converged && !out.best.converged) ||
                            (r.converged == out.best.converged && r.value < out.best.value);
        if (better) {
            out.best = r;
            have_best = true;
        }
        if (r.converged) {
            out.any_converged = true;
            const double tol = 1e-10 * (1.0 + std::abs(r.value));
            const bool agrees = std::any_of(converged_values.begin(), converged_values.end(),
                                            [&](double v) { return std::abs(v - r.value) <= tol; });
            converged_values.push_back(r.value);
            if (agrees) break;
        }
    }
    return out;
}

FittedAggregator fit_glm_design(const LinkFamily& link, const Eigen::MatrixXd& design, const Eigen::VectorXi& y,
                                const std::vector<std::string>& names, const FitOptions& opts, CounterRng rng) {
    const GlmObjective objective(link, design, y);
    const Eigen::Index k = design.cols() - 1;
    StartPlan plan;
    plan.fixed.push_back(Eigen::VectorXd::Zero(k + 1));
    Eigen::VectorXd equal = Eigen::VectorXd::Constant(k + 1, 1.0 / static_cast<double>(k));
    equal(0) = 0.0;
    plan.fixed.push_back(equal);
    plan.perturbation = 0.5;

    const MultiStartResult ms = multi_start(std::cref(objective), plan, opts, rng, 1e4);
    if (ms.any_diverged && !ms.any_converged)
        throw SeparationError("coefficients diverged past magnitude 1e4");
    if (!ms.any_converged) {
        std::ostringstream msg;
        msg << "GLM fit stopped with gradient norm " << ms.best.gradient.lpNorm<Eigen::Infinity>() << " after "
            << opts.restarts << " starts";
        throw ConvergenceError(msg.str(), ms.best.x, ms.best.value);
    }
    if (ms.diverged_value < ms.best.value || ms.best.value < kSeparationLoss)
        throw SeparationError("likelihood is unbounded; the outcomes are separable by the transformed reports");

    FittedAggregator model;
    model.link = link;
    model.intercept = ms.best.x(0);
    model.names = names;
    model.coefficients = ms.best.x.tail(k);
    model.clip_epsilon = opts.clip_epsilon;
    return model;
}

double scalar_signal(ScalarPool method, const Eigen::RowVectorXd& p) {
    if (method == ScalarPool::Karmarkar) return logit(p.mean());
    double s = 0.0;
    for (Eigen::Index j = 0; j < p.size(); ++j) s += logit(p(j));
    return s / static_cast<double>(p.size());
}

Eigen::VectorXd scalar_signals(ScalarPool method, const Eigen::MatrixXd& reports, double eps) {
    const Eigen::MatrixXd p = clip_matrix(reports, eps);
    Eigen::VectorXd s(p.rows());
    for (Eigen::Index r = 0; r < p.rows(); ++r) s(r) = scalar_signal(method, p.row(r));
    return s;
}

struct ScalarDerivatives {
    double value;
    double gradient;
    double curvature;
};

ScalarDerivatives scalar_derivatives(const Eigen::VectorXd& s, const Eigen::VectorXi& y, double a) {
    ScalarDerivatives d{0.0, 0.0, 0.0};
    for (Eigen::Index r = 0; r < s.size(); ++r) {
        const double z = a * s(r);
        const double q = sigmoid(z);
        d.value += softplus(z) - (y(r) == 1 ? z : 0.0);
        d.gradient += (q - y(r)) * s(r);
        d.curvature += q * (1.0 - q) * s(r) * s(r);
    }
    const double n = static_cast<double>(s.size());
    d.value /= n;
    d.gradient /= n;
    d.curvature /= n;
    return d;
}

}  // namespace

TrainingSet::TrainingSet(std::vector<std::string> names, Eigen::VectorXi outcome, Eigen::MatrixXd reports)
    : names_(std::move(names)), outcome_(std::move(outcome)), reports_(std::move(reports)) {
    if (outcome_.size() == 0) throw SchemaError("training set has no rows");
    if (reports_.rows() != outcome_.size()) throw SchemaError("report rows and outcomes differ in count");
    if (reports_.cols() < 1) throw SchemaError("training set needs at least one expert column");
    if (static_cast<Eigen::Index>(names_.size()) != reports_.cols())
        throw SchemaError("expert names and report columns differ in count");
    if (std::set<std::string>(names_.begin(), names_.end()).size() != names_.size())
        throw SchemaError("expert names must be distinct");
    for (Eigen::Index r = 0; r < outcome_.size(); ++r)
        if (outcome_(r) != 0 && outcome_(r) != 1)
            throw SchemaError("outcome in row " + std::to_string(r + 1) + " is not 0 or 1");
    if ((outcome_.array() == 1).count() == 0 || (outcome_.array() == 0).count() == 0)
        throw SchemaError("training set needs at least one positive and one negative outcome");
    for (Eigen::Index r = 0; r < reports_.rows(); ++r)
        for (Eigen::Index j = 0; j < reports_.cols(); ++j) {
            const double p = reports_(r, j);
            if (!(p >= 0.0 && p <= 1.0))
                throw SchemaError("report " + names_[static_cast<std::size_t>(j)] + " in row " +
                                  std::to_string(r + 1) + " is outside [0, 1]");
        }
}

TrainingSet TrainingSet::subset(const std::vector<Eigen::Index>& rows) const {
    Eigen::VectorXi y(static_cast<Eigen::Index>(rows.size()));
    Eigen::MatrixXd p(static_cast<Eigen::Index>(rows.size()), experts());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        y(static_cast<Eigen::Index>(i)) = outcome_(rows[i]);
        p.row(static_cast<Eigen::Index>(i)) = reports_.row(rows[i]);
    }
    return TrainingSet(names_, std::move(y), std::move(p));
}

void FitOptions::validate() const {
    if (!(gradient_tolerance > 0.0)) throw UsageError("gradient tolerance must be positive");
    if (max_iterations < 1) throw UsageError("max iterations must be at least 1");
    if (restarts < 1) throw UsageError("restarts must be at least 1");
    if (!(clip_epsilon > 0.0 && clip_epsilon < 0.5)) throw UsageError("clip epsilon must lie in (0, 0.5)");
}

void PowerGrid::validate() const {
    if (powers.empty()) throw UsageError("power grid is empty");
    std::set<double> seen;
    for (double eta : powers) {
        if (!(eta > 0.0) || eta > LinkFamily::kMaxPower)
            throw UsageError("grid power " + std::to_string(eta) + " is outside (0, 64]");
        if (!seen.insert(eta).second) throw UsageError("grid powers must be distinct");
    }
}

PowerGrid PowerGrid::parse(const std::string& comma_separated) {
    PowerGrid g;
    g.powers.clear();
    std::stringstream ss(comma_separated);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            g.powers.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw UsageError("cannot parse grid power '" + item + "'");
        }
    }
    g.validate();
    return g;
}

GlmObjective::GlmObjective(const LinkFamily& link, const TrainingSet& data, double clip_epsilon)
    : GlmObjective(link, glm_design(link, data.reports(), clip_epsilon), data.outcome()) {}

GlmObjective::GlmObjective(const LinkFamily& link, Eigen::MatrixXd design, Eigen::VectorXi outcome)
    : link_(link), design_(std::move(design)), outcome_(std::move(outcome)) {}

double GlmObjective::operator()(const Eigen::VectorXd& x, Eigen::VectorXd* grad) const {
    const Eigen::VectorXd eta = design_ * x;
    Eigen::VectorXd score(eta.size());
    double total = 0.0;
    for (Eigen::Index r = 0; r < eta.size(); ++r) {
        // Symmetric links: P(y = 0) = F(-eta).
        const double signed_eta = outcome_(r) == 1 ? eta(r) : -eta(r);
        const double log_f = link_log_cdf(link_, signed_eta);
        if (!std::isfinite(log_f)) return kInf;
        total += log_f;
        const double ratio = std::exp(link_log_pdf(link_, eta(r)) - log_f);
        score(r) = outcome_(r) == 1 ? ratio : -ratio;
    }
    const double n = static_cast<double>(eta.size());
    if (grad) *grad = -(design_.transpose() * score) / n;
    return -total / n;
}

Eigen::VectorXd softmax_weights(const Eigen::VectorXd& u) {
    Eigen::VectorXd logits(u.size() + 1);
    logits(0) = 0.0;
    logits.tail(u.size()) = u;
    const double top = logits.maxCoeff();
    Eigen::VectorXd w = (logits.array() - top).exp();
    return w / w.sum();
}

OlopObjective::OlopObjective(const TrainingSet& data, double clip_epsilon)
    : p_(clip_matrix(data.reports(), clip_epsilon)), y_(data.outcome()) {}

double OlopObjective::operator()(const Eigen::VectorXd& u, Eigen::VectorXd* grad) const {
    const Eigen::VectorXd w = softmax_weights(u);
    const Eigen::VectorXd pool = p_ * w;
    double total = 0.0;
    Eigen::VectorXd g = Eigen::VectorXd::Zero(u.size());
    for (Eigen::Index r = 0; r < pool.size(); ++r) {
        const double q = pool(r);
        const bool pos = y_(r) == 1;
        total += pos ? std::log(q) : std::log1p(-q);
        const double dq = pos ? 1.0 / q : -1.0 / (1.0 - q);
        for (Eigen::Index j = 1; j < w.size(); ++j) g(j - 1) += dq * w(j) * (p_(r, j) - q);
    }
    const double n = static_cast<double>(pool.size());
    if (grad) *grad = -g / n;
    return -total / n;
}

BlopObjective::BlopObjective(const TrainingSet& data, double clip_epsilon)
    : p_(clip_matrix(data.reports(), clip_epsilon)), y_(data.outcome()) {}

double BlopObjective::operator()(const Eigen::VectorXd& theta, Eigen::VectorXd* grad) const {
    using AD = Eigen::AutoDiffScalar<Eigen::Vector2d>;
    const Eigen::Index m = theta.size() - 2;
    const Eigen::VectorXd w = softmax_weights(theta.head(m));
    const double a = std::exp(theta(m));
    const double b = std::exp(theta(m + 1));
    if (!std::isfinite(a) || !std::isfinite(b) || a <= 0.0 || b <= 0.0) return kInf;
    const AD a_ad(a, 2, 0);
    const AD b_ad(b, 2, 1);

    const Eigen::VectorXd pool = p_ * w;
    double total = 0.0;
    Eigen::VectorXd g = Eigen::VectorXd::Zero(theta.size());
    for (Eigen::Index r = 0; r < pool.size(); ++r) {
        const double x = pool(r);
        // P(y = 0) = I_{1-x}(b, a) keeps the complement accurate near 1.
        const bool pos = y_(r) == 1;
        const AD q = pos ? reg_inc_beta(a_ad, b_ad, x) : reg_inc_beta(b_ad, a_ad, 1.0 - x);
        if (!(q.value() > 0.0)) return kInf;
        total += std::log(q.value());
        const double dpool = (pos ? 1.0 : -1.0) * beta_pdf(a, b, x) / q.value();
        for (Eigen::Index j = 1; j < w.size(); ++j) g(j - 1) += dpool * w(j) * (p_(r, j) - x);
        g(m) += q.derivatives()(0) * a / q.value();
        g(m + 1) += q.derivatives()(1) * b / q.value();
    }
    const double n = static_cast<double>(pool.size());
    if (grad) *grad = -g / n;
    return -total / n;
}

FittedAggregator fit_glm(const LinkFamily& link, const TrainingSet& data, const FitOptions& opts) {
    opts.validate();
    return fit_glm_design(link, glm_design(link, data.reports(), opts.clip_epsilon), data.outcome(), data.names(),
                          opts, CounterRng(opts.seed).substream("glm"));
}

PowerSelection select_power(const PowerGrid& grid, const TrainingSet& data, const FoldAssignment& folds,
                            const FitOptions& opts, int jobs) {
    grid.validate();
    opts.validate();
    if (folds.rows() != data.rows()) throw SchemaError("fold assignment does not cover the training rows");
    const std::size_t g = grid.powers.size();
    const int k = folds.folds();

    std::vector<Eigen::MatrixXd> designs(g);
    parallel_for(g, jobs, [&](std::size_t i) {
        designs[i] = glm_design(LinkFamily::exponential_power(grid.powers[i]), data.reports(), opts.clip_epsilon);
    });

    struct FoldFit {
        FittedAggregator model;
        std::exception_ptr error;
        std::string failure;
    };
    std::vector<FoldFit> fits(g * static_cast<std::size_t>(k));
    std::vector<Eigen::VectorXd> oof(g, Eigen::VectorXd(data.rows()));
    const CounterRng base = CounterRng(opts.seed).substream("glm");
    parallel_for(fits.size(), jobs, [&](std::size_t task) {
        const std::size_t gi = task / static_cast<std::size_t>(k);
        const int fold = static_cast<int>(task % static_cast<std::size_t>(k));
        const LinkFamily link = LinkFamily::exponential_power(grid.powers[gi]);
        FoldFit& out = fits[task];
        try {
            const auto train = folds.complement(fold);
            Eigen::MatrixXd z_train(static_cast<Eigen::Index>(train.size()), designs[gi].cols());
            Eigen::VectorXi y_train(static_cast<Eigen::Index>(train.size()));
            for (std::size_t i = 0; i < train.size(); ++i) {
                z_train.row(static_cast<Eigen::Index>(i)) = designs[gi].row(train[i]);
                y_train(static_cast<Eigen::Index>(i)) = data.outcome()(train[i]);
            }
            if ((y_train.array() == 1).count() == 0 || (y_train.array() == 0).count() == 0)
                throw SchemaError("fold complement has a single outcome class");
            out.model = fit_glm_design(link, z_train, y_train, data.names(), opts,
                                       base.substream(static_cast<std::uint64_t>(fold) + 1));
            Eigen::VectorXd x(out.model.coefficients.size() + 1);
            x << out.model.intercept, out.model.coefficients;
            // Folds own disjoint rows, so these writes never overlap.
            for (Eigen::Index r : folds.members(fold)) oof[gi](r) = link_cdf(link, designs[gi].row(r).dot(x));
        } catch (const std::exception& e) {
            out.error = std::current_exception();
            out.failure = "fold " + std::to_string(fold + 1) + ": " + e.what();
        }
    });

    PowerSelection sel;
    std::exception_ptr first_error;
    std::optional<std::size_t> best;
    for (std::size_t gi = 0; gi < g; ++gi) {
        GridPoint point{grid.powers[gi], std::nullopt, "", {}, {}};
        for (int fold = 0; fold < k; ++fold) {
            FoldFit& f = fits[gi * static_cast<std::size_t>(k) + static_cast<std::size_t>(fold)];
            if (f.error) {
                if (!first_error) first_error = f.error;
                point.failure = f.failure;
                point.fold_models.clear();
                break;
            }
            point.fold_models.push_back(std::move(f.model));
        }
        if (point.failure.empty()) {
            point.mean_oof_ls = mean_log_score(PredictionSet(oof[gi], data.outcome(), opts.clip_epsilon));
            point.oof = std::move(oof[gi]);
            if (!best) {
                best = gi;
            } else {
                const GridPoint& b = sel.grid[*best];
                if (*point.mean_oof_ls < *b.mean_oof_ls ||
                    (*point.mean_oof_ls == *b.mean_oof_ls && point.power < b.power))
                    best = gi;
            }
        }
        sel.grid.push_back(std::move(point));
    }
    if (!best) std::rethrow_exception(first_error);

    sel.power = grid.powers[*best];
    const LinkFamily link = LinkFamily::exponential_power(sel.power);
    sel.model = fit_glm_design(link, designs[*best], data.outcome(), data.names(), opts, base);
    return sel;
}

Eigen::VectorXd fit_olop(const TrainingSet& data, const FitOptions& opts) {
    opts.validate();
    const Eigen::Index k = data.experts();
    if (k == 1) return Eigen::VectorXd::Ones(1);
    const OlopObjective objective(data, opts.clip_epsilon);
    StartPlan plan{{Eigen::VectorXd::Zero(k - 1)}, 1.0};
    const MultiStartResult ms =
        multi_start(std::cref(objective), plan, opts, CounterRng(opts.seed).substream("olop"), kInf);
    if (!ms.any_converged) throw ConvergenceError("linear pool weights", ms.best.x, ms.best.value);
    return softmax_weights(ms.best.x);
}

BlopFit fit_blop(const TrainingSet& data, const FitOptions& opts) {
    opts.validate();
    const Eigen::Index k = data.experts();
    const BlopObjective objective(data, opts.clip_epsilon);
    StartPlan plan{{Eigen::VectorXd::Zero(k + 1)}, 0.5};
    const MultiStartResult ms =
        multi_start(std::cref(objective), plan, opts, CounterRng(opts.seed).substream("blop"), kInf);
    if (!ms.any_converged) throw ConvergenceError("beta-transformed pool", ms.best.x, ms.best.value);
    return BlopFit{softmax_weights(ms.best.x.head(k - 1)), std::exp(ms.best.x(k - 1)), std::exp(ms.best.x(k))};
}

double scalar_objective(ScalarPool method, const TrainingSet& data, double a, double clip_epsilon) {
    return scalar_derivatives(scalar_signals(method, data.reports(), clip_epsilon), data.outcome(), a).value;
}

double fit_scalar(ScalarPool method, const TrainingSet& data, const FitOptions& opts) {
    opts.validate();
    const Eigen::VectorXd s = scalar_signals(method, data.reports(), opts.clip_epsilon);
    const Eigen::VectorXi& y = data.outcome();
    auto f = [&](double a) { return scalar_derivatives(s, y, a).value; };

    // The loss is convex in a, so golden section brackets the minimizer.
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = kScalarLower;
    double hi = kScalarUpper;
    double x1 = hi - inv_phi * (hi - lo);
    double x2 = lo + inv_phi * (hi - lo);
    double f1 = f(x1);
    double f2 = f(x2);
    for (int it = 0; it < 200 && hi - lo > 1e-10 * (1.0 + lo); ++it) {
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    double a = 0.5 * (lo + hi);
    ScalarDerivatives d = scalar_derivatives(s, y, a);
    for (int it = 0; it < opts.max_iterations && std::abs(d.gradient) >= opts.gradient_tolerance; ++it) {
        if (!(d.curvature > 0.0)) break;
        const double next = std::clamp(a - d.gradient / d.curvature, kScalarLower, kScalarUpper);
        if (next == a) break;
        a = next;
        d = scalar_derivatives(s, y, a);
    }
    if (a >= kScalarUpper && d.gradient < 0.0)
        throw ConvergenceError("scalar pool exponent runs past the upper bound 100", Eigen::VectorXd::Constant(1, a),
                               d.value);
    if (std::abs(d.gradient) >= opts.gradient_tolerance && a > kScalarLower)
        throw ConvergenceError("scalar pool exponent", Eigen::VectorXd::Constant(1, a), d.value);
    return a;
}

double mean_log_likelihood(const Eigen::VectorXd& q, const Eigen::VectorXi& y) {
    if (q.size() != y.size() || q.size() == 0) throw SchemaError("forecasts and outcomes differ in length");
    double total = 0.0;
    for (Eigen::Index r = 0; r < q.size(); ++r) total += y(r) == 1 ? std::log(q(r)) : std::log1p(-q(r));
    return total / static_cast<double>(q.size());
}

Eigen::VectorXd predict_glm(const FittedAggregator& model, const Eigen::MatrixXd& reports) {
    if (reports.cols() != model.coefficients.size())
        throw SchemaError("model has " + std::to_string(model.coefficients.size()) + " coefficients but data has " +
                          std::to_string(reports.cols()) + " expert columns");
    const Eigen::MatrixXd z = glm_design(model.link, reports, model.clip_epsilon);
    Eigen::VectorXd x(model.coefficients.size() + 1);
    x << model.intercept, model.coefficients;
    const Eigen::VectorXd eta = z * x;
    return eta.unaryExpr([&](double e) { return link_cdf(model.link, e); });
}

Eigen::VectorXd predict_lop(const Eigen::VectorXd& weights, const Eigen::MatrixXd& reports, double clip_epsilon) {
    if (weights.size() != reports.cols()) throw SchemaError("pool weights and expert columns differ in count");
    return clip_matrix(reports, clip_epsilon) * weights;
}

Eigen::VectorXd predict_blop(const BlopFit& fit, const Eigen::MatrixXd& reports, double clip_epsilon) {
    const Eigen::VectorXd pool = predict_lop(fit.weights, reports, clip_epsilon);
    return pool.unaryExpr([&](double x) { return reg_inc_beta(fit.a, fit.b, x); });
}

Eigen::VectorXd predict_scalar(ScalarPool method, double a, const Eigen::MatrixXd& reports, double clip_epsilon) {
    const Eigen::VectorXd s = scalar_signals(method, reports, clip_epsilon);
    return s.unaryExpr([&](double v) { return sigmoid(a * v); });
}

}  // namespace poolcast
