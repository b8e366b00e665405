#include "poolcast/optimizer.hpp"

#include <cmath>
#include <limits>

namespace poolcast {

namespace {

constexpr double kArmijo = 1e-4;
constexpr int kMaxHalvings = 60;

}  // namespace

OptimizerResult minimize_bfgs(const Objective& f, Eigen::VectorXd x0, const OptimizerOptions& opts) {
    const Eigen::Index n = x0.size();
    OptimizerResult res;
    res.x = std::move(x0);
    res.gradient.resize(n);
    res.value = f(res.x, &res.gradient);
    res.trace.push_back(res.value);
    if (n == 0) {
        res.converged = true;
        return res;
    }

    Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n);
    bool fresh = true;
    Eigen::VectorXd g_new(n);

    while (res.iterations < opts.max_iterations) {
        if (!std::isfinite(res.value)) break;
        if (res.gradient.lpNorm<Eigen::Infinity>() < opts.gradient_tolerance) {
            res.converged = true;
            break;
        }
        Eigen::VectorXd dir = -h * res.gradient;
        double slope = res.gradient.dot(dir);
        if (!(slope < 0.0)) {
            h.setIdentity();
            fresh = true;
            dir = -res.gradient;
            slope = -res.gradient.squaredNorm();
        }

        // Backtracking line search on the Armijo condition. Near the optimum
        // the decrease falls below rounding, so a step that keeps f within a
        // few ulps while shrinking the gradient is also taken.
        double step = 1.0;
        if (fresh) step = std::min(1.0, 1.0 / std::max(1e-12, res.gradient.lpNorm<Eigen::Infinity>()));
        bool accepted = false;
        Eigen::VectorXd x_new(n);
        double f_new = 0.0;
        for (int halving = 0; halving < kMaxHalvings; ++halving) {
            x_new = res.x + step * dir;
            f_new = f(x_new, &g_new);
            if (std::isfinite(f_new)) {
                if (f_new <= res.value + kArmijo * step * slope) {
                    accepted = true;
                    break;
                }
                const double noise = 4.0 * std::numeric_limits<double>::epsilon() * std::abs(res.value);
                if (f_new <= res.value + noise && g_new.lpNorm<Eigen::Infinity>() < res.gradient.lpNorm<Eigen::Infinity>()) {
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if (!accepted) {
            if (fresh) break;
            h.setIdentity();
            fresh = true;
            continue;
        }

        const Eigen::VectorXd s = x_new - res.x;
        const Eigen::VectorXd y = g_new - res.gradient;
        res.x = x_new;
        res.value = f_new;
        res.gradient = g_new;
        res.trace.push_back(f_new);
        ++res.iterations;

        if (res.x.lpNorm<Eigen::Infinity>() > opts.divergence_bound) {
            res.diverged = true;
            break;
        }

        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            if (fresh) h *= sy / y.squaredNorm();
            const double rho = 1.0 / sy;
            const Eigen::VectorXd hy = h * y;
            // H+ = (I - rho s y') H (I - rho y s') + rho s s'
            h += rho * ((1.0 + rho * y.dot(hy)) * s * s.transpose() - hy * s.transpose() - s * hy.transpose());
            fresh = false;
        }
    }
    if (!res.converged && res.gradient.lpNorm<Eigen::Infinity>() < opts.gradient_tolerance) res.converged = true;
    return res;
}

}  // namespace poolcast
