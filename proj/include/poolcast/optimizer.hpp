#pragma once

#include <functional>
#include <vector>

#include <Eigen/Core>

namespace poolcast {

/// Returns f(x) and writes the gradient into *grad.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* grad)>;

struct OptimizerOptions {
    double gradient_tolerance = 1e-8;
    int max_iterations = 500;
    /// Coordinates beyond this magnitude abort the run as divergent.
    double divergence_bound = 1e4;
};

struct OptimizerResult {
    Eigen::VectorXd x;
    double value = 0.0;
    Eigen::VectorXd gradient;
    int iterations = 0;
    bool converged = false;
    bool diverged = false;
    /// Objective at the start and after every accepted step.
    std::vector<double> trace;
};

/// BFGS on the inverse Hessian with Armijo backtracking. Stops when the
/// gradient's infinity norm drops below the tolerance.
OptimizerResult minimize_bfgs(const Objective& f, Eigen::VectorXd x0, const OptimizerOptions& opts = {});

}  // namespace poolcast
