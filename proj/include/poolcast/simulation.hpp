#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "poolcast/conjugate_pairs.hpp"
#include "poolcast/dataset.hpp"
#include "poolcast/distributions.hpp"
#include "poolcast/gp_ensemble.hpp"

namespace poolcast {

/// Experts who see private and shared samples from a conjugate pair.
struct ConjugateGenerator {
    ConjugatePair pair;
    SampleDesign design;
};

/// Jointly normal information states with a link-GLM outcome.
struct LatentGenerator {
    InformationModel model;
    LinkFamily link = LinkFamily::normal();
};

/// Uniform reports pushed through a known fitted aggregator.
struct FittedGenerator {
    FittedAggregator truth;
};

struct SimConfig {
    std::variant<ConjugateGenerator, LatentGenerator, FittedGenerator> generator;
    Eigen::Index rows = 1000;
    std::uint64_t seed = 0;
    /// Expert names; defaults to e1..ek.
    std::vector<std::string> names;

    void validate() const;
};

/// Per row: theta from the prior, samples, each expert's predictive
/// probability, and y from one more draw. Oracle column `bayes` holds the
/// exact aggregate where one exists for the design.
Dataset simulate_conjugate(const ConjugateGenerator& gen, Eigen::Index rows, std::uint64_t seed,
                           std::vector<std::string> names = {}, int jobs = 1);

/// Per row: x ~ N(mean, covariance), calibrated expert reports, and
/// y ~ Bernoulli(F(intercept + coefficients . x)). Oracle columns `truth`
/// (P(y = 1 | x)) and `ensemble` (the probit/EP ensemble of the reports).
Dataset simulate_latent(const LatentGenerator& gen, Eigen::Index rows, std::uint64_t seed,
                        std::vector<std::string> names = {}, int jobs = 1);

/// Reports uniform on (0, 1); y ~ Bernoulli(apply_fitted). Oracle `truth`.
Dataset simulate_fitted(const FittedGenerator& gen, Eigen::Index rows, std::uint64_t seed,
                        std::vector<std::string> names = {}, int jobs = 1);

Dataset simulate(const SimConfig& config, int jobs = 1);

}  // namespace poolcast
