#include "poolcast/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "poolcast/errors.hpp"

namespace poolcast {

namespace {

void check_probability(double p, const char* what) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError(std::string(what) + " must lie strictly inside (0, 1)");
}

void check_outcome(int y) {
    if (y != 0 && y != 1) throw SchemaError("outcomes must be 0 or 1");
}

}  // namespace

PredictionSet::PredictionSet(Eigen::VectorXd forecast, Eigen::VectorXi outcome, double clip_epsilon)
    : forecast_(std::move(forecast)), outcome_(std::move(outcome)) {
    if (forecast_.size() == 0) throw SchemaError("prediction set is empty");
    if (forecast_.size() != outcome_.size()) throw SchemaError("forecast and outcome lengths differ");
    for (Eigen::Index r = 0; r < outcome_.size(); ++r) {
        check_outcome(outcome_(r));
        if (!(forecast_(r) >= 0.0 && forecast_(r) <= 1.0)) throw SchemaError("forecast outside [0, 1]");
    }
    forecast_ = forecast_.cwiseMax(clip_epsilon).cwiseMin(1.0 - clip_epsilon);
}

PredictionSet& PredictionSet::with_average(Eigen::VectorXd p_bar) {
    if (p_bar.size() != size()) throw SchemaError("average column length differs from forecasts");
    average_ = std::move(p_bar);
    return *this;
}

PredictionSet& PredictionSet::with_prior(Eigen::VectorXd p0) {
    if (p0.size() != size()) throw SchemaError("prior column length differs from forecasts");
    prior_ = std::move(p0);
    return *this;
}

PredictionSet& PredictionSet::with_prior(double p0) { return with_prior(Eigen::VectorXd::Constant(size(), p0)); }

double log_score(double p, int y) {
    check_probability(p, "forecast");
    check_outcome(y);
    return y == 1 ? -std::log(p) : -std::log1p(-p);
}

double asym_log_score(double p, int y, double c) {
    check_probability(p, "forecast");
    check_probability(c, "baseline");
    return (log_score(c, y) - log_score(p, y)) / log_score(c, p > c ? 1 : 0);
}

double mean_log_score(const PredictionSet& preds) {
    double acc = 0.0;
    for (Eigen::Index r = 0; r < preds.size(); ++r) acc += log_score(preds.forecast()(r), preds.outcome()(r));
    return acc / static_cast<double>(preds.size());
}

double mean_asym_log_score(const PredictionSet& preds, double baseline) {
    double acc = 0.0;
    for (Eigen::Index r = 0; r < preds.size(); ++r)
        acc += asym_log_score(preds.forecast()(r), preds.outcome()(r), baseline);
    return acc / static_cast<double>(preds.size());
}

double auc(const PredictionSet& preds) {
    const Eigen::Index n = preds.size();
    const auto positives = static_cast<double>(preds.outcome().sum());
    const double negatives = static_cast<double>(n) - positives;
    if (positives == 0.0 || negatives == 0.0) throw UndefinedMetric("AUC needs both outcome classes");

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    const Eigen::VectorXd& p = preds.forecast();
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return p(a) < p(b); });

    double rank_sum = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && p(order[j + 1]) == p(order[i])) ++j;
        // Ranks i+1 .. j+1 share their average.
        const double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t)
            if (preds.outcome()(order[t]) == 1) rank_sum += avg_rank;
        i = j + 1;
    }
    return (rank_sum - positives * (positives + 1.0) / 2.0) / (positives * negatives);
}

Extremizing classify_extremizing(double p_hat, double p_bar, double p0) {
    if (p_bar == p0) throw UndefinedClassification("average forecast equals the prior-predictive probability");
    if (p_hat == p_bar) throw UndefinedClassification("aggregate equals the average forecast");
    const bool same_side = (p_hat - p0 > 0.0) == (p_bar - p0 > 0.0) && p_hat != p0;
    return same_side && std::abs(p_hat - p0) > std::abs(p_bar - p0) ? Extremizing::Extremizes
                                                                      : Extremizing::AntiExtremizes;
}

ExtremizingRate extremizing_rate(const PredictionSet& preds) {
    if (!preds.average() || !preds.prior())
        throw SchemaError("extremizing rate needs average-forecast and prior columns");
    const Eigen::VectorXd& bar = *preds.average();
    const Eigen::VectorXd& prior = *preds.prior();
    std::size_t extremizes = 0;
    std::size_t classified = 0;
    std::size_t excluded = 0;
    for (Eigen::Index r = 0; r < preds.size(); ++r) {
        const double p = preds.forecast()(r);
        if (bar(r) == prior(r) || p == bar(r)) {
            ++excluded;
            continue;
        }
        ++classified;
        if (classify_extremizing(p, bar(r), prior(r)) == Extremizing::Extremizes) ++extremizes;
    }
    if (classified == 0) throw UndefinedMetric("no row admits an extremizing classification");
    return {static_cast<double>(extremizes) / static_cast<double>(classified), classified, excluded};
}

}  // namespace poolcast
