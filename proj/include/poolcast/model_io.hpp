#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "poolcast/gp_ensemble.hpp"
#include "poolcast/simulation.hpp"

namespace poolcast {

/// Fitted aggregator plus the facts about how it was trained.
struct ModelDocument {
    static constexpr int kSchemaVersion = 1;

    FittedAggregator model;
    Eigen::Index training_rows = 0;
    double base_rate = 0.0;
    std::uint64_t seed = 0;

    struct GridResult {
        double power;
        std::optional<double> mean_oof_ls;
    };
    std::vector<GridResult> grid_results;
};

std::string model_to_json(const ModelDocument& doc);
/// Throws SchemaError naming the first missing or malformed field.
ModelDocument model_from_json(const std::string& text, const std::string& source = "<model>");

void write_model(const std::filesystem::path& path, const ModelDocument& doc);
ModelDocument read_model(const std::filesystem::path& path);

/// Generator settings from a JSON document. For `conjugate`:
///   {"pair": {"family": "beta_bernoulli", "alpha": 1, "beta": 1},
///    "private": [2, 2], "shared": 0}
/// with families beta_bernoulli(alpha, beta), gamma_poisson(shape, rate),
/// normal_normal(prior_mean, prior_sd, sd), gen_gamma_gumbel(alpha, beta, scale).
/// For `latent`: {"mean": [...], "covariance": [[...]], "intercept": c,
///   "coefficients": [...], "link": {"family": "ep", "power": 4}}
/// or {"exchangeable": {"k": 3, "rho": 0.5, "variance": 1, "coefficient": 1,
///   "intercept": 0, "mean": 0}, ...}. Both accept optional "names".
/// Rows and seed are left at their defaults for the caller to set.
SimConfig sim_config_from_json(const std::string& generator, const std::string& text,
                               const std::string& source = "<config>");

/// Forecast file: columns y, pred and, optionally, p_bar.
struct Predictions {
    Eigen::VectorXi outcome;
    Eigen::VectorXd forecast;
    std::optional<Eigen::VectorXd> average;
};

Predictions parse_predictions(std::istream& in, const std::string& source = "<stream>");
Predictions read_predictions(const std::filesystem::path& path);
void write_predictions(std::ostream& out, const Predictions& preds);
void write_predictions(const std::filesystem::path& path, const Predictions& preds);

}  // namespace poolcast
