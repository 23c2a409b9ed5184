#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace perdisp {

/// Empirical distribution function over a sorted copy of the samples.
class EmpiricalCdf {
public:
    EmpiricalCdf() = default;
    explicit EmpiricalCdf(std::vector<double> samples);

    /// Fraction of samples <= t.
    [[nodiscard]] double operator()(double t) const;
    /// Smallest sample x with F(x) >= prob (prob in [0, 1]).
    [[nodiscard]] double quantile(double prob) const;

    [[nodiscard]] std::size_t size() const { return sorted_.size(); }
    [[nodiscard]] bool empty() const { return sorted_.empty(); }
    [[nodiscard]] double min() const { return sorted_.front(); }
    [[nodiscard]] double max() const { return sorted_.back(); }
    [[nodiscard]] const std::vector<double>& sorted() const { return sorted_; }

private:
    std::vector<double> sorted_;
};

/// One row of a quantile table.
struct QuantilePoint {
    double probability;
    double value;
};

/// Quantiles at probabilities 0, 1/resolution, ..., 1.
std::vector<QuantilePoint> quantile_table(const EmpiricalCdf& ecdf, int resolution);

/// (t, F(t)) on `points` uniformly spaced t in [lo, hi].
std::vector<std::pair<double, double>> cdf_grid(const EmpiricalCdf& ecdf, double lo, double hi, int points);

/// sup_t (F_upper(t) - F_lower(t)), floored at 0. Evaluated on a uniform grid
/// and at every jump of F_upper, which makes it exact.
double dominance_shortfall(const EmpiricalCdf& lower, const EmpiricalCdf& upper, int grid_points = 1000);

/// lower <=_st upper up to `tolerance`: F_lower(t) >= F_upper(t) - tolerance for all t.
bool empirical_st_dominates(const EmpiricalCdf& lower, const EmpiricalCdf& upper, double tolerance,
                            int grid_points = 1000);

}  // namespace perdisp
