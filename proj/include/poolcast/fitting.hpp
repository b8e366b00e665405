#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "poolcast/conjugate_pairs.hpp"
#include "poolcast/distributions.hpp"
#include "poolcast/folds.hpp"
#include "poolcast/gp_ensemble.hpp"
#include "poolcast/optimizer.hpp"

namespace poolcast {

/// Outcomes with one row of named expert reports each. Both classes must be
/// present.
class TrainingSet {
public:
    TrainingSet(std::vector<std::string> names, Eigen::VectorXi outcome, Eigen::MatrixXd reports);

    Eigen::Index rows() const noexcept { return outcome_.size(); }
    Eigen::Index experts() const noexcept { return reports_.cols(); }
    const std::vector<std::string>& names() const noexcept { return names_; }
    const Eigen::VectorXi& outcome() const noexcept { return outcome_; }
    const Eigen::MatrixXd& reports() const noexcept { return reports_; }
    ExpertReports row(Eigen::Index r) const { return ExpertReports(Eigen::VectorXd(reports_.row(r).transpose())); }
    double base_rate() const { return outcome_.cast<double>().mean(); }

    TrainingSet subset(const std::vector<Eigen::Index>& rows) const;

private:
    std::vector<std::string> names_;
    Eigen::VectorXi outcome_;
    Eigen::MatrixXd reports_;
};

struct FitOptions {
    double gradient_tolerance = 1e-8;
    int max_iterations = 500;
    /// Number of optimizer starts; the first two are fixed, the rest are
    /// seeded perturbations.
    int restarts = 3;
    double clip_epsilon = 1e-9;
    std::uint64_t seed = 0;

    void validate() const;
};

struct PowerGrid {
    std::vector<double> powers{1, 2, 3, 4, 6, 9, 12, 16, 25, 40, 64};

    void validate() const;
    static PowerGrid parse(const std::string& comma_separated);
};

/// Mean negative log-likelihood of F(c + b . z) with z_ri = F^{-1}(clip(p_ri)).
/// Parameters are (c, b_1..b_k).
class GlmObjective {
public:
    GlmObjective(const LinkFamily& link, const TrainingSet& data, double clip_epsilon);
    GlmObjective(const LinkFamily& link, Eigen::MatrixXd design, Eigen::VectorXi outcome);

    double operator()(const Eigen::VectorXd& x, Eigen::VectorXd* grad) const;
    const Eigen::MatrixXd& design() const noexcept { return design_; }

private:
    LinkFamily link_;
    Eigen::MatrixXd design_;
    Eigen::VectorXi outcome_;
};

/// Mean negative log-likelihood of the linear pool with softmax weights;
/// parameters are the logits of experts 2..k against expert 1.
class OlopObjective {
public:
    OlopObjective(const TrainingSet& data, double clip_epsilon);
    double operator()(const Eigen::VectorXd& u, Eigen::VectorXd* grad) const;

private:
    Eigen::MatrixXd p_;
    Eigen::VectorXi y_;
};

/// Beta-transformed pool; parameters are (logits, log a, log b).
class BlopObjective {
public:
    BlopObjective(const TrainingSet& data, double clip_epsilon);
    double operator()(const Eigen::VectorXd& theta, Eigen::VectorXd* grad) const;

private:
    Eigen::MatrixXd p_;
    Eigen::VectorXi y_;
};

/// Simplex weights from logits of experts 2..k (expert 1 pinned at 0).
Eigen::VectorXd softmax_weights(const Eigen::VectorXd& u);

FittedAggregator fit_glm(const LinkFamily& link, const TrainingSet& data, const FitOptions& opts = {});

struct GridPoint {
    double power;
    /// Mean log score over all out-of-fold predictions.
    std::optional<double> mean_oof_ls;
    std::string failure;
    /// Out-of-fold predictions in row order; empty when the point failed.
    Eigen::VectorXd oof;
    /// Model fitted on each fold's complement.
    std::vector<FittedAggregator> fold_models;
};

struct PowerSelection {
    double power;
    FittedAggregator model;
    std::vector<GridPoint> grid;
};

/// Cross-validated choice of the exponential-power shape, then a refit on
/// all rows at the winner. A grid point fails as a whole when any of its
/// fold fits fails.
PowerSelection select_power(const PowerGrid& grid, const TrainingSet& data, const FoldAssignment& folds,
                            const FitOptions& opts = {}, int jobs = 1);

Eigen::VectorXd fit_olop(const TrainingSet& data, const FitOptions& opts = {});

struct BlopFit {
    Eigen::VectorXd weights;
    double a;
    double b;
};

BlopFit fit_blop(const TrainingSet& data, const FitOptions& opts = {});

enum class ScalarPool { Karmarkar, Logit };

/// Mean negative log-likelihood of logistic(a s_r), where s_r is the logit of
/// the equal-weight pool (Karmarkar) or the mean logit of the reports.
double scalar_objective(ScalarPool method, const TrainingSet& data, double a, double clip_epsilon = 1e-9);

/// One-dimensional MLE of a on (0, 100].
double fit_scalar(ScalarPool method, const TrainingSet& data, const FitOptions& opts = {});

/// Mean log-likelihood (higher is better) of forecasts q for outcomes y.
double mean_log_likelihood(const Eigen::VectorXd& q, const Eigen::VectorXi& y);

Eigen::VectorXd predict_glm(const FittedAggregator& model, const Eigen::MatrixXd& reports);
Eigen::VectorXd predict_lop(const Eigen::VectorXd& weights, const Eigen::MatrixXd& reports, double clip_epsilon);
Eigen::VectorXd predict_blop(const BlopFit& fit, const Eigen::MatrixXd& reports, double clip_epsilon);
Eigen::VectorXd predict_scalar(ScalarPool method, double a, const Eigen::MatrixXd& reports, double clip_epsilon);

}  // namespace poolcast
