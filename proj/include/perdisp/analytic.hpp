#pragma once

#include <vector>

#include <Eigen/Core>

#include "perdisp/distributions.hpp"
#include "perdisp/policy.hpp"

namespace perdisp {

struct Dm1Result {
    double sigma = 0.0;
    double mean = 0.0;
    double variance = 0.0;
};

/// Stationary wait of the D/M/1 queue with inter-arrival time T and service
/// rate mu: an atom 1 - sigma at zero and an exponential tail of rate
/// mu (1 - sigma), sigma being the root in (0,1) of sigma = exp(-mu T (1 - sigma)).
/// Throws InstabilityError unless mu T > 1.
Dm1Result dm1_wait(double interarrival, double mu);

struct GridOptions {
    /// <= 0 selects T / 2048. Adjusted down so that T is a whole number of steps.
    double grid_step = 0.0;
    /// The grid ends where a Cramer-Lundberg bound leaves less than this mass.
    double tail_mass = 1e-10;
    /// Stop when successive CDFs differ by less than this in sup norm.
    double tolerance = 1e-10;
    int max_iterations = 200'000;
};

struct Dgi1Result {
    double mean = 0.0;
    double variance = 0.0;
    double grid_step = 0.0;
    int iterations = 0;
    /// Probability mass at t = i * grid_step; mass(0) is the atom at zero.
    Eigen::VectorXd mass;
};

/// D/GI/1 stationary wait by iterating F -> law of (W + S - T)^+ on a lattice,
/// starting from the point mass at zero. Service mass is spread onto the two
/// nearest lattice points with weights that preserve its mean, and the
/// convolution runs through an FFT.
Dgi1Result dgi1_wait(double interarrival, const DistributionSpec& service, const GridOptions& options = {});

struct WaitMoments {
    double mean = 0.0;
    double variance = 0.0;
};

/// True for service laws with a rational Laplace transform (or a point mass),
/// for which dgi1_wait_exact applies.
bool has_exact_wait(const DistributionSpec& service);

/// D/GI/1 mean and variance from the roots of D(s) - N(s) e^{sT} in Re s < 0,
/// where N/D is the service Laplace transform: with roots s_i,
/// E W = sum 1/(-s_i) - D'(0)/D(0) and Var W = sum 1/s_i^2 + (D'/D)'(0).
/// Covers deterministic, exponential, Erlang and two-phase hyperexponential
/// service; throws DomainError for other kinds.
WaitMoments dgi1_wait_exact(double interarrival, const DistributionSpec& service);

enum class WaitMethod { automatic, grid, exact };

struct AnalyticOptions {
    /// automatic: exact roots where available, lattice iteration otherwise.
    WaitMethod method = WaitMethod::automatic;
    GridOptions grid;
};

WaitMoments dgi1_moments(double interarrival, const DistributionSpec& service, const AnalyticOptions& options = {});

struct TypeLimit {
    double weight = 0.0;        // p_r / |p|
    double interarrival = 0.0;  // |p| / (p_r lambda)
    double mean = 0.0;
    double variance = 0.0;
};

/// Limiting (k -> infinity) waiting time for proportions p: a mixture of R
/// independent D/GI/1 queues.
struct LimitSummary {
    std::vector<TypeLimit> per_type;
    double mixture_mean = 0.0;
    double mixture_variance = 0.0;
};

/// Throws InstabilityError naming the first type with lambda p_r / |p| >= mu_r.
LimitSummary limit_summary(const PVector& p, double lambda, const std::vector<DistributionSpec>& services,
                           const AnalyticOptions& options = {});

/// Limiting mean wait at routing fractions x on the simplex:
/// sum_r x_r E W_r(T = 1 / (lambda x_r)), with unused types contributing 0.
/// Throws InfeasibleError outside the simplex or the stable region.
double objective(const Eigen::VectorXd& x, double lambda, const std::vector<DistributionSpec>& services,
                 const AnalyticOptions& options = {});

}  // namespace perdisp
