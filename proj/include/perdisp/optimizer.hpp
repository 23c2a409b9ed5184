#pragma once

#include <utility>
#include <vector>

#include <Eigen/Core>

#include "perdisp/analytic.hpp"
#include "perdisp/distributions.hpp"
#include "perdisp/policy.hpp"

namespace perdisp {

/// Euclidean projection of y onto {x : sum x = 1, 0 <= x <= upper}.
/// Requires sum(upper) >= 1.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> project_capped_simplex(
    const Eigen::MatrixBase<Derived>& y, const Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1>& upper)
{
    using Scalar = typename Derived::Scalar;
    using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    auto clipped = [&](Scalar tau) -> Vec { return (y.array() - tau).max(Scalar(0)).min(upper.array()).matrix(); };
    // sum(clipped(tau)) is non-increasing in tau; bracket and bisect
    Scalar lo = (y - upper).minCoeff() - Scalar(1);
    Scalar hi = y.maxCoeff();
    for (int i = 0; i < 200; ++i) {
        const Scalar mid = (lo + hi) / Scalar(2);
        (clipped(mid).sum() > Scalar(1) ? lo : hi) = mid;
    }
    Vec x = clipped((lo + hi) / Scalar(2));
    // solve for tau exactly on the free coordinates
    Scalar free_sum = 0;
    Scalar fixed = 0;
    int free_count = 0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (x(i) > Scalar(0) && x(i) < upper(i)) {
            free_sum += y(i);
            ++free_count;
        } else {
            fixed += x(i);
        }
    }
    if (free_count > 0) {
        const Scalar tau = (free_sum - (Scalar(1) - fixed)) / free_count;
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            if (x(i) > Scalar(0) && x(i) < upper(i)) {
                x(i) = std::clamp(y(i) - tau, Scalar(0), upper(i));
            }
        }
    }
    return x;
}

/// Stable routing fractions shrunk by `slack`: lambda x_r <= (1 - slack) mu_r.
struct FeasibleSet {
    double lambda = 1.0;
    Eigen::VectorXd mu;
    double slack = 1e-3;

    [[nodiscard]] int types() const { return static_cast<int>(mu.size()); }
    /// Per-type caps min(1, (1 - slack) mu_r / lambda).
    [[nodiscard]] Eigen::VectorXd upper() const;
    [[nodiscard]] bool nonempty() const;
    [[nodiscard]] bool contains(const Eigen::VectorXd& x, double tol = 1e-12) const;
};

FeasibleSet make_feasible_set(double lambda, const std::vector<DistributionSpec>& services, double slack = 1e-3);

struct OptimizerOptions {
    double tolerance = 1e-8;  // on the projected-gradient norm
    int max_iterations = 5000;
    double fd_step = 1e-5;
    /// Empty: start from the capacity-proportional point.
    Eigen::VectorXd start;
    AnalyticOptions analytic;
};

struct TrajectoryPoint {
    int iteration = 0;
    Eigen::VectorXd x;
    double value = 0.0;
    double gradient_norm = 0.0;
};

struct OptimizationResult {
    Eigen::VectorXd x_opt;
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
    /// Largest first-order decrease available along e_i - e_j moves that stay feasible.
    double certificate = 0.0;
    std::vector<TrajectoryPoint> trajectory;
};

/// Projected-gradient descent on the limiting mean wait over the feasible set.
/// The objective is a sum of one-dimensional convex terms, so each gradient
/// entry is a central difference in its own coordinate (one-sided at bounds).
OptimizationResult minimize(const FeasibleSet& feasible, const std::vector<DistributionSpec>& services,
                            const OptimizerOptions& options = {});

/// Integer proportions for x with |p| <= max_norm. If x = p/|p| exactly for
/// some such p with positive entries, the smallest one is returned. Otherwise
/// the candidates are, for each denominator d, the floor/ceil roundings of d x
/// that sum to d, and the one minimizing objective(p/|p|) wins; ties go to
/// the smaller |p|.
PVector rationalize(const Eigen::VectorXd& x, int max_norm, double lambda,
                    const std::vector<DistributionSpec>& services, const AnalyticOptions& options = {});

/// max over pairs and theta = i/(m+1), i = 1..m, of
/// f(theta x + (1 - theta) y) - (theta f(x) + (1 - theta) f(y)).
double convexity_probe(const std::vector<DistributionSpec>& services, double lambda,
                       const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& pairs, int points,
                       const AnalyticOptions& options = {});

}  // namespace perdisp
