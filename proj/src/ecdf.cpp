#include "perdisp/ecdf.hpp"

#include <algorithm>
#include <cmath>

#include "perdisp/errors.hpp"

namespace perdisp {

EmpiricalCdf::EmpiricalCdf(std::vector<double> samples) : sorted_(std::move(samples))
{
    std::sort(sorted_.begin(), sorted_.end());
}

double EmpiricalCdf::operator()(double t) const
{
    if (sorted_.empty()) {
        throw DomainError("empirical cdf of an empty sample");
    }
    const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), t);
    return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
}

double EmpiricalCdf::quantile(double prob) const
{
    if (sorted_.empty()) {
        throw DomainError("quantile of an empty sample");
    }
    const double n = static_cast<double>(sorted_.size());
    const auto idx = static_cast<std::size_t>(std::max(0.0, std::ceil(prob * n) - 1.0));
    return sorted_[std::min(idx, sorted_.size() - 1)];
}

std::vector<QuantilePoint> quantile_table(const EmpiricalCdf& ecdf, int resolution)
{
    std::vector<QuantilePoint> out;
    if (ecdf.empty() || resolution < 1) {
        return out;
    }
    out.reserve(static_cast<std::size_t>(resolution) + 1);
    for (int i = 0; i <= resolution; ++i) {
        const double prob = static_cast<double>(i) / resolution;
        out.push_back({prob, ecdf.quantile(prob)});
    }
    return out;
}

std::vector<std::pair<double, double>> cdf_grid(const EmpiricalCdf& ecdf, double lo, double hi, int points)
{
    std::vector<std::pair<double, double>> out;
    out.reserve(static_cast<std::size_t>(std::max(points, 0)));
    for (int i = 0; i < points; ++i) {
        const double t = points == 1 ? lo : lo + (hi - lo) * i / (points - 1);
        out.emplace_back(t, ecdf(t));
    }
    return out;
}

double dominance_shortfall(const EmpiricalCdf& lower, const EmpiricalCdf& upper, int grid_points)
{
    const double lo = std::min(lower.min(), upper.min());
    const double hi = std::max(lower.max(), upper.max());
    double worst = 0.0;
    auto probe = [&](double t) { worst = std::max(worst, upper(t) - lower(t)); };
    for (const auto& [t, f] : cdf_grid(lower, lo, hi, grid_points)) {
        probe(t);
    }
    // U - L is right-continuous and only jumps up at samples of `upper`, so its
    // supremum is attained at one of them
    const auto& u = upper.sorted();
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (i + 1 == u.size() || u[i + 1] != u[i]) {
            probe(u[i]);
        }
    }
    return worst;
}

bool empirical_st_dominates(const EmpiricalCdf& lower, const EmpiricalCdf& upper, double tolerance, int grid_points)
{
    return dominance_shortfall(lower, upper, grid_points) <= tolerance;
}

}  // namespace perdisp
