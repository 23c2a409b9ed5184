#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "perdisp/distributions.hpp"
#include "perdisp/ecdf.hpp"
#include "perdisp/policy.hpp"

namespace perdisp {

/// One scaled system: R types with k replicas each, dispatcher rate lambda * k.
struct SystemConfig {
    int types = 1;
    int replicas = 1;
    double lambda = 1.0;
    ArrivalModel arrival;
    std::vector<DistributionSpec> service;  // one per type; mu_r = 1 / mean
};

void validate(const SystemConfig& config);

/// Throws ConfigError when the policy does not fit the system and
/// InstabilityError unless lambda k q_{r,kappa} < mu_r for every used queue.
void check_stability(const SystemConfig& config, const PeriodicPolicy& policy);

struct SimPlan {
    std::int64_t jobs_total = 2'000'000;
    double warmup_fraction = 0.2;
    int replications = 1;
    std::uint64_t seed = 1;
    int batch_count = 32;
    int ecdf_resolution = 100;
    /// Per-queue cap on the thinned sample kept for the quantile table.
    std::int64_t ecdf_sample_cap = 20'000;
    int threads = 1;
    /// Refuse to start an analytically unstable run (the in-run guard still applies).
    bool precheck_stability = true;
};

void validate(const SimPlan& plan, const PeriodicPolicy& policy);

struct WaitingTimeStats {
    double mean = 0.0;
    double variance = 0.0;
    double ci_halfwidth = 0.0;  // 95%
    std::int64_t n_samples = 0;
    std::vector<QuantilePoint> ecdf;
};

struct QueueStats {
    QueueId queue;
    double weight = 0.0;  // q_{r,kappa}
    WaitingTimeStats wait;
    double gap_mean = 0.0;  // inter-arrival times seen by the queue
    double gap_variance = 0.0;
    std::int64_t gap_samples = 0;
};

struct MixtureStats {
    double mean = 0.0;
    double variance = 0.0;
    double ci_halfwidth = 0.0;
    std::int64_t n_samples = 0;
    std::vector<QueueStats> per_queue;  // flat queue order

    [[nodiscard]] const QueueStats& queue(QueueId id) const;
};

/// W_0 = 0, W_n = (W_{n-1} + x_n)^+ where x_n = S_n - T_n.
std::vector<double> lindley_trace(std::span<const double> service_minus_gap);

/// sum_i w_i m_i
template <typename DerivedW, typename DerivedM>
typename DerivedM::Scalar mixture_mean(const Eigen::MatrixBase<DerivedW>& weights,
                                       const Eigen::MatrixBase<DerivedM>& means)
{
    return weights.dot(means);
}

/// Law of total variance: sum_i w_i (v_i + (m_i - m)^2) with m the mixture mean.
template <typename DerivedW, typename DerivedM, typename DerivedV>
typename DerivedM::Scalar mixture_variance(const Eigen::MatrixBase<DerivedW>& weights,
                                           const Eigen::MatrixBase<DerivedM>& means,
                                           const Eigen::MatrixBase<DerivedV>& variances)
{
    const auto m = mixture_mean(weights, means);
    return weights.dot(variances + (means.array() - m).square().matrix());
}

/// Simulates the dispatcher and all R k FCFS queues from empty, discards the
/// warmup prefix and estimates per-queue and mixture waiting-time statistics.
/// Job n goes to policy.queue_at(n). Confidence intervals come from batch
/// means over dispatcher-job blocks that each hold a whole number of policy
/// periods, or from replication means when replications >= 8.
MixtureStats simulate(const SystemConfig& config, const PeriodicPolicy& policy, const SimPlan& plan);

/// First `count` inter-arrival times observed at `queue` (replication 0).
std::vector<double> queue_arrival_gaps(const SystemConfig& config, const PeriodicPolicy& policy, QueueId queue,
                                       std::int64_t count, std::uint64_t seed);

/// Waits of dispatcher jobs first..last-1 (0-based) of one run from empty,
/// with job n routed to policy.queue_at(n + offset).
std::vector<double> job_waits(const SystemConfig& config, const PeriodicPolicy& policy, std::int64_t first,
                              std::int64_t last, std::uint64_t seed, std::uint64_t replication,
                              std::int64_t offset);

struct JobRange {
    std::int64_t first;  // 0-based, inclusive
    std::int64_t last;   // exclusive
};

struct MonotonicityResult {
    EmpiricalCdf early;
    EmpiricalCdf late;
    double shortfall = 0.0;  // sup (F_late - F_early)
    bool dominated = false;
};

/// Pools job-indexed waits over replications, each started from empty with a
/// uniformly random period offset, and checks early <=_st late.
MonotonicityResult monotonicity_check(const SystemConfig& config, const PeriodicPolicy& policy, JobRange early,
                                      JobRange late, int replications, std::uint64_t seed, double tolerance);

struct SweepRow {
    int k = 0;
    double mean = 0.0;
    double ci_halfwidth = 0.0;
    double variance = 0.0;
    double analytic_mean = 0.0;
    double analytic_variance = 0.0;
};

/// simulate() on scale_policy(base, k) for each k; the analytic columns hold
/// the k -> infinity limits.
std::vector<SweepRow> convergence_sweep(const PeriodicPolicy& base, const SystemConfig& config_template,
                                        std::span<const int> k_list, const SimPlan& plan);

struct LowerBoundRow {
    int policy_index = 0;
    int k = 0;
    double mean = 0.0;
    double ci_halfwidth = 0.0;
    double bound = 0.0;  // limiting mean for p
    bool consistent = false;  // mean + 3 ci >= bound
};

/// Simulates each policy and compares with the limiting mean for p. Every
/// policy must send exactly p_r / |p| of the jobs to type r.
std::vector<LowerBoundRow> lower_bound_check(const SystemConfig& config, const PVector& p,
                                             std::span<const PeriodicPolicy> policies, const SimPlan& plan);

}  // namespace perdisp
