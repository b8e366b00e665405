#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "poolcast/distributions.hpp"
#include "poolcast/fitting.hpp"
#include "poolcast/folds.hpp"

namespace poolcast {

/// One row of the score table: an aggregation method or an expert column
/// scored as is.
struct Method {
    enum class Kind { PassThrough, Average, Olop, Blop, Klop, Logit, Glm, GlmGrid };

    Kind kind = Kind::Average;
    /// Expert name for pass-through rows.
    std::string column;
    /// Link for Kind::Glm.
    LinkFamily link = LinkFamily::normal();

    std::string label() const;
};

/// Comma list of method names: avg, olop, blop, klop, logit, glm (normal
/// link), glm:normal, glm:logistic, glm:ep<power>, glm-grid, an expert name
/// (with or without its p_ prefix), or `experts` for every expert column.
std::vector<Method> parse_methods(const std::string& list, const std::vector<std::string>& experts);

struct CvOptions {
    FitOptions fit;
    PowerGrid grid;
    int jobs = 1;
};

struct FoldScore {
    Eigen::Index rows = 0;
    /// Complement base rate, the ALS baseline for this fold.
    double baseline = 0.0;
    std::optional<double> ls;
    /// Missing when the complement holds one outcome class.
    std::optional<double> als;
    /// Missing when the fold holds one outcome class.
    std::optional<double> auc;
    /// Fitted parameters in a method-specific flat layout.
    Eigen::VectorXd parameters;
    std::string failure;

    bool failed() const noexcept { return !failure.empty(); }
};

struct MethodScores {
    Method method;
    std::vector<FoldScore> folds;
    /// LS and ALS averaged over every held-out row of the folds that
    /// succeeded (and define the metric); AUC averaged over those folds.
    std::optional<double> ls;
    std::optional<double> als;
    std::optional<double> auc;
    /// Share of classifiable held-out rows where the forecast extremizes
    /// the equal-weight average; absent for pass-through rows.
    std::optional<double> extremizing_rate;
    /// Out-of-fold forecasts in row order; NaN on failed folds.
    Eigen::VectorXd oof;

    std::size_t failed_folds() const;
};

/// Full-data summary of the exponential-power grid search.
struct GridSummary {
    PowerSelection selection;
    double base_rate = 0.0;
    Eigen::Index observations = 0;
    std::optional<double> extremizing_rate;
};

struct ScoreTable {
    Eigen::Index rows = 0;
    int folds = 0;
    std::uint64_t seed = 0;
    std::vector<MethodScores> methods;
    std::optional<GridSummary> grid;
};

/// Fits every method on each fold's complement and scores the held-out
/// fold. Fit failures are recorded per fold. glm-grid picks the power with
/// the lowest pooled out-of-fold log score over the same folds and refits on
/// all rows.
ScoreTable cross_validate(const TrainingSet& data, const std::vector<Method>& methods, const FoldAssignment& folds,
                          const CvOptions& opts = {});

enum class ReportFormat { Markdown, Delimited };

ReportFormat parse_report_format(const std::string& name);

/// Method grid at four decimals, failures, and the glm-grid summary when
/// present. Throws UsageError for a table without methods.
std::string render_report(const ScoreTable& table, ReportFormat format);

}  // namespace poolcast
