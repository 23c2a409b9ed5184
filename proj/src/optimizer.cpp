#include "perdisp/optimizer.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/core.h>

#include "perdisp/errors.hpp"

namespace perdisp {

Eigen::VectorXd FeasibleSet::upper() const
{
    return ((1.0 - slack) * mu / lambda).cwiseMin(1.0);
}

bool FeasibleSet::nonempty() const { return mu.size() > 0 && lambda < (1.0 - slack) * mu.sum(); }

bool FeasibleSet::contains(const Eigen::VectorXd& x, double tol) const
{
    return x.size() == mu.size() && (x.array() >= -tol).all() && (x.array() <= upper().array() + tol).all() &&
           std::abs(x.sum() - 1.0) <= 1e-9;
}

FeasibleSet make_feasible_set(double lambda, const std::vector<DistributionSpec>& services, double slack)
{
    if (!(slack > 0.0 && slack < 1.0)) {
        throw ConfigError(fmt::format("slack must be in (0,1), got {}", slack));
    }
    if (!(std::isfinite(lambda) && lambda > 0.0)) {
        throw ConfigError(fmt::format("lambda must be > 0, got {}", lambda));
    }
    FeasibleSet set;
    set.lambda = lambda;
    set.slack = slack;
    set.mu.resize(static_cast<Eigen::Index>(services.size()));
    for (std::size_t r = 0; r < services.size(); ++r) {
        validate(services[r]);
        set.mu(static_cast<Eigen::Index>(r)) = 1.0 / mean(services[r]);
    }
    return set;
}

namespace {

/// x_r E W_r at T = 1 / (lambda x_r); zero for an unused type.
double type_cost(const DistributionSpec& service, double lambda, double share, const AnalyticOptions& options)
{
    if (share <= 0.0) {
        return 0.0;
    }
    return share * dgi1_moments(1.0 / (lambda * share), service, options).mean;
}

double total_cost(const Eigen::VectorXd& x, double lambda, const std::vector<DistributionSpec>& services,
                  const AnalyticOptions& options)
{
    double v = 0.0;
    for (Eigen::Index r = 0; r < x.size(); ++r) {
        v += type_cost(services[static_cast<std::size_t>(r)], lambda, x(r), options);
    }
    return v;
}

Eigen::VectorXd gradient(const Eigen::VectorXd& x, const FeasibleSet& set, const std::vector<DistributionSpec>& services,
                         double step, const AnalyticOptions& options)
{
    const Eigen::VectorXd upper = set.upper();
    Eigen::VectorXd g(x.size());
    for (Eigen::Index r = 0; r < x.size(); ++r) {
        const auto& s = services[static_cast<std::size_t>(r)];
        auto f = [&](double v) { return type_cost(s, set.lambda, v, options); };
        const double lo = x(r) - step;
        const double hi = x(r) + step;
        if (lo >= 0.0 && hi <= upper(r)) {
            g(r) = (f(hi) - f(lo)) / (2.0 * step);
        } else if (hi <= upper(r)) {
            g(r) = (f(hi) - f(x(r))) / step;
        } else {
            g(r) = (f(x(r)) - f(lo)) / step;
        }
    }
    return g;
}

double certificate(const Eigen::VectorXd& x, const Eigen::VectorXd& g, const Eigen::VectorXd& upper)
{
    double worst = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        for (Eigen::Index j = 0; j < x.size(); ++j) {
            // shift mass from j to i
            if (i != j && x(j) > 1e-12 && x(i) < upper(i) - 1e-12) {
                worst = std::max(worst, g(j) - g(i));
            }
        }
    }
    return worst;
}

}  // namespace

OptimizationResult minimize(const FeasibleSet& feasible, const std::vector<DistributionSpec>& services,
                            const OptimizerOptions& options)
{
    if (feasible.types() != static_cast<int>(services.size()) || feasible.types() < 1) {
        throw ConfigError("feasible set and services disagree on the number of types");
    }
    if (!feasible.nonempty()) {
        throw InfeasibleError(fmt::format("no stable routing: lambda = {} >= (1 - slack) sum mu = {}", feasible.lambda,
                                          (1.0 - feasible.slack) * feasible.mu.sum()));
    }
    const Eigen::VectorXd upper = feasible.upper();
    Eigen::VectorXd x = options.start.size() > 0 ? options.start : Eigen::VectorXd(feasible.mu / feasible.mu.sum());
    if (x.size() != feasible.mu.size()) {
        throw ConfigError("start point has the wrong dimension");
    }
    x = project_capped_simplex(x, upper);

    OptimizationResult result;
    double value = total_cost(x, feasible.lambda, services, options.analytic);
    double alpha = 1.0;
    int it = 0;
    for (; it < options.max_iterations; ++it) {
        const Eigen::VectorXd g = gradient(x, feasible, services, options.fd_step, options.analytic);
        const double pg_norm = (x - project_capped_simplex(Eigen::VectorXd(x - g), upper)).norm();
        result.trajectory.push_back({it, x, value, pg_norm});
        if (pg_norm < options.tolerance) {
            result.converged = true;
            break;
        }
        alpha = std::min(alpha * 2.0, 1e6);
        bool moved = false;
        for (int backtrack = 0; backtrack < 80; ++backtrack) {
            const Eigen::VectorXd candidate = project_capped_simplex(Eigen::VectorXd(x - alpha * g), upper);
            const Eigen::VectorXd d = candidate - x;
            const double v = total_cost(candidate, feasible.lambda, services, options.analytic);
            if (v <= value + g.dot(d) + d.squaredNorm() / (2.0 * alpha)) {
                moved = d.norm() > 0.0;
                x = candidate;
                value = v;
                break;
            }
            alpha *= 0.5;
        }
        if (!moved) {
            // no representable descent step is left
            result.converged = true;
            break;
        }
    }
    const Eigen::VectorXd g = gradient(x, feasible, services, options.fd_step, options.analytic);
    result.x_opt = x;
    result.value = value;
    result.iterations = it;
    result.certificate = certificate(x, g, upper);
    return result;
}

PVector rationalize(const Eigen::VectorXd& x, int max_norm, double lambda,
                    const std::vector<DistributionSpec>& services, const AnalyticOptions& options)
{
    const auto types = static_cast<int>(x.size());
    if (types < 1 || types != static_cast<int>(services.size())) {
        throw ConfigError("x and services disagree on the number of types");
    }
    if (types > 20) {
        throw ConfigError("rationalize supports at most 20 types");
    }
    // an exact representation with a small enough norm is returned as is
    for (int d = types; d <= max_norm; ++d) {
        std::vector<int> p(static_cast<std::size_t>(types));
        bool exact = true;
        for (int r = 0; r < types && exact; ++r) {
            const double scaled = x(r) * d;
            p[static_cast<std::size_t>(r)] = static_cast<int>(std::lround(scaled));
            exact = std::abs(scaled - std::round(scaled)) <= 1e-9 * d && p[static_cast<std::size_t>(r)] >= 1;
        }
        if (exact && std::accumulate(p.begin(), p.end(), 0) == d) {
            return PVector(p);
        }
    }
    std::vector<int> best;
    double best_value = std::numeric_limits<double>::infinity();
    for (int d = types; d <= max_norm; ++d) {
        std::vector<int> floors(static_cast<std::size_t>(types));
        for (int r = 0; r < types; ++r) {
            floors[static_cast<std::size_t>(r)] = static_cast<int>(std::floor(x(r) * d));
        }
        for (std::uint32_t mask = 0; mask < (1u << types); ++mask) {
            std::vector<int> p = floors;
            int sum = 0;
            bool valid = true;
            for (int r = 0; r < types; ++r) {
                if (mask & (1u << r)) {
                    ++p[static_cast<std::size_t>(r)];
                }
                valid = valid && p[static_cast<std::size_t>(r)] >= 1;
                sum += p[static_cast<std::size_t>(r)];
            }
            if (!valid || sum != d) {
                continue;
            }
            Eigen::VectorXd frac(types);
            for (int r = 0; r < types; ++r) {
                frac(r) = static_cast<double>(p[static_cast<std::size_t>(r)]) / d;
            }
            double v = 0.0;
            try {
                v = objective(frac, lambda, services, options);
            } catch (const InfeasibleError&) {
                continue;
            }
            // strict improvement needed to replace a smaller-norm candidate
            if (best.empty() || v < best_value - 1e-12 * std::max(1.0, std::abs(best_value))) {
                best = p;
                best_value = v;
            }
        }
    }
    if (best.empty()) {
        throw InfeasibleError(fmt::format("no stable integer proportions with |p| <= {}", max_norm));
    }
    return PVector(best);
}

double convexity_probe(const std::vector<DistributionSpec>& services, double lambda,
                       const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& pairs, int points,
                       const AnalyticOptions& options)
{
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& [x, y] : pairs) {
        const double fx = objective(x, lambda, services, options);
        const double fy = objective(y, lambda, services, options);
        for (int i = 1; i <= points; ++i) {
            const double theta = static_cast<double>(i) / (points + 1);
            const Eigen::VectorXd z = y + theta * (x - y);
            worst = std::max(worst, objective(z, lambda, services, options) - (fy + theta * (fx - fy)));
        }
    }
    return worst;
}

}  // namespace perdisp
