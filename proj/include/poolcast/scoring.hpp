#pragma once

#include <cstddef>
#include <optional>

#include <Eigen/Core>

namespace poolcast {

/// Forecasts with binary outcomes. Forecasts are clipped to [eps, 1 - eps] on
/// construction. Optional companions: the per-row average forecast and the
/// per-row prior-predictive probability.
class PredictionSet {
public:
    PredictionSet(Eigen::VectorXd forecast, Eigen::VectorXi outcome, double clip_epsilon = 1e-9);

    Eigen::Index size() const noexcept { return forecast_.size(); }
    const Eigen::VectorXd& forecast() const noexcept { return forecast_; }
    const Eigen::VectorXi& outcome() const noexcept { return outcome_; }

    PredictionSet& with_average(Eigen::VectorXd p_bar);
    PredictionSet& with_prior(Eigen::VectorXd p0);
    PredictionSet& with_prior(double p0);
    const std::optional<Eigen::VectorXd>& average() const noexcept { return average_; }
    const std::optional<Eigen::VectorXd>& prior() const noexcept { return prior_; }

private:
    Eigen::VectorXd forecast_;
    Eigen::VectorXi outcome_;
    std::optional<Eigen::VectorXd> average_;
    std::optional<Eigen::VectorXd> prior_;
};

double log_score(double p, int y);
/// (LS(c, y) - LS(p, y)) / LS(c, 1{p > c}).
double asym_log_score(double p, int y, double c);

double mean_log_score(const PredictionSet& preds);
double mean_asym_log_score(const PredictionSet& preds, double baseline);
/// Mann-Whitney AUC by rank summation, ties credited 1/2.
double auc(const PredictionSet& preds);

enum class Extremizing { Extremizes, AntiExtremizes };

/// Extremizes iff p_hat lies on p_bar's side of p0 and farther from it.
/// Requires p_bar != p0 and p_hat != p_bar.
Extremizing classify_extremizing(double p_hat, double p_bar, double p0);

struct ExtremizingRate {
    double rate;
    std::size_t classified;
    std::size_t excluded;
};

/// Fraction of classifiable rows whose forecast extremizes the average.
/// Needs both companions on the prediction set.
ExtremizingRate extremizing_rate(const PredictionSet& preds);

}  // namespace poolcast
