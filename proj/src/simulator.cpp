#include "perdisp/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <functional>
#include <thread>

#include <boost/math/distributions/students_t.hpp>
#include <fmt/core.h>

#include "perdisp/analytic.hpp"
#include "perdisp/errors.hpp"

namespace perdisp {

namespace {

/// Streaming mean/variance (Welford), mergeable with Chan's update.
struct RunningMoments {
    std::int64_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x)
    {
        ++n;
        const double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }

    void merge(const RunningMoments& o)
    {
        if (o.n == 0) {
            return;
        }
        if (n == 0) {
            *this = o;
            return;
        }
        const double total = static_cast<double>(n + o.n);
        const double d = o.mean - mean;
        mean += d * static_cast<double>(o.n) / total;
        m2 += o.m2 + d * d * static_cast<double>(n) * static_cast<double>(o.n) / total;
        n += o.n;
    }

    [[nodiscard]] double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
};

double t_quantile_975(std::int64_t dof)
{
    boost::math::students_t dist(static_cast<double>(dof));
    return boost::math::quantile(dist, 0.975);
}

double ci_halfwidth(const std::vector<double>& estimates)
{
    if (estimates.size() < 2) {
        return 0.0;
    }
    RunningMoments m;
    for (double x : estimates) {
        m.add(x);
    }
    const auto n = static_cast<std::int64_t>(estimates.size());
    return t_quantile_975(n - 1) * std::sqrt(m.variance() / static_cast<double>(n));
}

/// Measurement window: the last batch_count * batch_len jobs, batch_len a multiple of the period.
struct Window {
    std::int64_t start = 0;
    std::int64_t batch_len = 0;
    int batches = 0;
};

Window measurement_window(const SimPlan& plan, std::int64_t period)
{
    const auto warm = static_cast<std::int64_t>(std::ceil(plan.warmup_fraction * static_cast<double>(plan.jobs_total)));
    const std::int64_t available = plan.jobs_total - warm;
    const std::int64_t periods_per_batch = available / (plan.batch_count * period);
    if (periods_per_batch < 1) {
        throw ConfigError(fmt::format("jobs_total = {} leaves no room for {} batches of whole periods ({} jobs each)",
                                      plan.jobs_total, plan.batch_count, period));
    }
    Window w;
    w.batch_len = periods_per_batch * period;
    w.batches = plan.batch_count;
    w.start = plan.jobs_total - w.batch_len * w.batches;
    return w;
}

struct QueueRun {
    RunningMoments waits;
    RunningMoments gaps;
    std::vector<double> batch_sums;
    std::vector<double> kept;
};

struct ReplicationRun {
    std::vector<QueueRun> queues;
    std::vector<double> mixture_batches;
};

std::vector<int> flat_assignment(const PeriodicPolicy& policy)
{
    std::vector<int> out;
    out.reserve(policy.assignment().size());
    for (const QueueId& id : policy.assignment()) {
        out.push_back(id.flat_index(policy.replicas()));
    }
    return out;
}

/// Drives the dispatcher and every queue from empty for `jobs` jobs. The
/// callback sees (job index, flat queue, wait, gap or NaN for a queue's first job).
template <typename OnJob>
void run_system(const SystemConfig& config, const PeriodicPolicy& policy, std::uint64_t seed,
                std::uint64_t replication, std::int64_t offset, std::int64_t jobs, OnJob&& on_job)
{
    const DistributionSpec interarrival = dispatcher_interarrival_spec(config.arrival, config.lambda, config.replicas);
    const std::vector<int> route = flat_assignment(policy);
    const auto period = static_cast<std::int64_t>(route.size());
    const int queue_count = policy.queue_count();

    struct State {
        RandomStream stream;
        bool arrived = false;
        double last_epoch = 0.0;
        double wait = 0.0;
        double pending_service = 0.0;
    };
    std::vector<State> queues;
    queues.reserve(static_cast<std::size_t>(queue_count));
    for (int i = 0; i < queue_count; ++i) {
        queues.push_back(State{RandomStream(seed, replication, kFirstQueueStream + static_cast<std::uint64_t>(i))});
    }
    std::vector<const DistributionSpec*> service_of(static_cast<std::size_t>(queue_count));
    for (int i = 0; i < queue_count; ++i) {
        service_of[static_cast<std::size_t>(i)] =
            &config.service[static_cast<std::size_t>(QueueId::from_flat(i, policy.replicas()).type - 1)];
    }

    RandomStream dispatcher(seed, replication, kDispatcherStream);
    double epoch = 0.0;
    std::int64_t slot = ((offset % period) + period) % period;
    for (std::int64_t n = 0; n < jobs; ++n) {
        epoch += sample(interarrival, dispatcher);
        const int q = route[static_cast<std::size_t>(slot)];
        if (++slot == period) {
            slot = 0;
        }
        State& st = queues[static_cast<std::size_t>(q)];
        double wait = 0.0;
        double gap = std::nan("");
        if (st.arrived) {
            gap = epoch - st.last_epoch;
            wait = std::max(0.0, st.wait + st.pending_service - gap);
        }
        on_job(n, q, wait, gap);
        st.arrived = true;
        st.wait = wait;
        st.pending_service = sample(*service_of[static_cast<std::size_t>(q)], st.stream);
        st.last_epoch = epoch;
    }
}

ReplicationRun run_replication(const SystemConfig& config, const PeriodicPolicy& policy, const SimPlan& plan,
                               const Window& window, std::uint64_t replication)
{
    const int queue_count = policy.queue_count();
    const std::int64_t period = policy.period();
    ReplicationRun run;
    run.queues.resize(static_cast<std::size_t>(queue_count));
    std::vector<std::int64_t> stride(static_cast<std::size_t>(queue_count), 1);
    std::vector<std::int64_t> seen(static_cast<std::size_t>(queue_count), 0);
    for (int i = 0; i < queue_count; ++i) {
        auto& q = run.queues[static_cast<std::size_t>(i)];
        q.batch_sums.assign(static_cast<std::size_t>(window.batches), 0.0);
        const std::int64_t visits = policy.visits(QueueId::from_flat(i, policy.replicas()));
        const std::int64_t post = window.batch_len / period * visits * window.batches;
        stride[static_cast<std::size_t>(i)] = std::max<std::int64_t>(1, (post + plan.ecdf_sample_cap - 1) /
                                                                            std::max<std::int64_t>(1, plan.ecdf_sample_cap));
        q.kept.reserve(static_cast<std::size_t>(std::min(post, plan.ecdf_sample_cap)));
    }

    run_system(config, policy, plan.seed, replication, 0, plan.jobs_total,
               [&](std::int64_t n, int q, double wait, double gap) {
                   if (n < window.start) {
                       return;
                   }
                   auto& acc = run.queues[static_cast<std::size_t>(q)];
                   acc.waits.add(wait);
                   if (!std::isnan(gap)) {
                       acc.gaps.add(gap);
                   }
                   acc.batch_sums[static_cast<std::size_t>((n - window.start) / window.batch_len)] += wait;
                   if (seen[static_cast<std::size_t>(q)]++ % stride[static_cast<std::size_t>(q)] == 0) {
                       acc.kept.push_back(wait);
                   }
               });

    // every batch holds whole periods, so the q-weighted batch mean is the plain job average
    run.mixture_batches.assign(static_cast<std::size_t>(window.batches), 0.0);
    for (const auto& q : run.queues) {
        for (int b = 0; b < window.batches; ++b) {
            run.mixture_batches[static_cast<std::size_t>(b)] += q.batch_sums[static_cast<std::size_t>(b)];
        }
    }
    for (double& b : run.mixture_batches) {
        b /= static_cast<double>(window.batch_len);
        if (!std::isfinite(b)) {
            throw InstabilityError("non-finite waiting times; the system is unstable");
        }
    }

    const int decile = std::max(1, window.batches / 10);
    double first = 0.0;
    double last = 0.0;
    for (int b = 0; b < decile; ++b) {
        first += run.mixture_batches[static_cast<std::size_t>(b)];
        last += run.mixture_batches[static_cast<std::size_t>(window.batches - 1 - b)];
    }
    if (last > 10.0 * first && last > 0.0) {
        throw InstabilityError(fmt::format(
            "mean wait over the last decile ({:.6g}) exceeds 10x the first post-warmup decile ({:.6g}); "
            "the system looks unstable",
            last / decile, first / decile));
    }
    return run;
}

template <typename Fn>
void parallel_for(int count, int threads, Fn&& fn)
{
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
    auto worker = [&](int t, int step) {
        for (int i = t; i < count; i += step) {
            try {
                fn(i);
            } catch (...) {
                errors[static_cast<std::size_t>(i)] = std::current_exception();
            }
        }
    };
    const int workers = std::clamp(threads, 1, std::max(count, 1));
    if (workers == 1) {
        worker(0, 1);
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < workers; ++t) {
            pool.emplace_back(worker, t, workers);
        }
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

}  // namespace

void validate(const SystemConfig& config)
{
    if (config.types < 1 || config.replicas < 1) {
        throw ConfigError(fmt::format("need R >= 1 and k >= 1, got R={} k={}", config.types, config.replicas));
    }
    if (!(std::isfinite(config.lambda) && config.lambda > 0.0)) {
        throw ConfigError(fmt::format("lambda must be > 0, got {}", config.lambda));
    }
    if (config.service.size() != static_cast<std::size_t>(config.types)) {
        throw ConfigError(fmt::format("expected {} service specs, got {}", config.types, config.service.size()));
    }
    for (const auto& s : config.service) {
        validate(s);
    }
    if (config.arrival.arrival_case == ArrivalCase::renewal) {
        validate(config.arrival.base);
    }
}

void check_stability(const SystemConfig& config, const PeriodicPolicy& policy)
{
    validate(config);
    if (policy.types() != config.types || policy.replicas() != config.replicas) {
        throw ConfigError(fmt::format("policy is for R={} k={} but the system has R={} k={}", policy.types(),
                                      policy.replicas(), config.types, config.replicas));
    }
    for (int r = 1; r <= config.types; ++r) {
        const double mu = 1.0 / mean(config.service[static_cast<std::size_t>(r - 1)]);
        for (int kappa = 1; kappa <= config.replicas; ++kappa) {
            const Rational& q = policy.fractions()({r, kappa});
            const double rate =
                config.lambda * config.replicas * static_cast<double>(q.numerator()) / static_cast<double>(q.denominator());
            if (q != Rational(0) && !(rate < mu)) {
                throw InstabilityError(fmt::format("queue ({},{}) is unstable: arrival rate {:.6g} >= service rate {:.6g}",
                                                   r, kappa, rate, mu));
            }
        }
    }
}

void validate(const SimPlan& plan, const PeriodicPolicy& policy)
{
    if (plan.replications < 1) {
        throw ConfigError("replications must be >= 1");
    }
    if (plan.batch_count < 10) {
        throw ConfigError(fmt::format("batch_count must be >= 10, got {}", plan.batch_count));
    }
    if (!(plan.warmup_fraction >= 0.0 && plan.warmup_fraction < 1.0)) {
        throw ConfigError(fmt::format("warmup_fraction must be in [0,1), got {}", plan.warmup_fraction));
    }
    if (plan.jobs_total < 10 * policy.fractions().n_star()) {
        throw ConfigError(fmt::format("jobs_total must be >= 10 n* = {}", 10 * policy.fractions().n_star()));
    }
    if (plan.ecdf_resolution < 1 || plan.ecdf_sample_cap < 1) {
        throw ConfigError("ecdf resolution and sample cap must be positive");
    }
    if (plan.threads < 1) {
        throw ConfigError("threads must be >= 1");
    }
}

const QueueStats& MixtureStats::queue(QueueId id) const
{
    for (const auto& q : per_queue) {
        if (q.queue == id) {
            return q;
        }
    }
    throw DomainError(fmt::format("no statistics for queue ({},{})", id.type, id.replica));
}

std::vector<double> lindley_trace(std::span<const double> service_minus_gap)
{
    std::vector<double> out;
    out.reserve(service_minus_gap.size());
    double w = 0.0;
    for (double x : service_minus_gap) {
        w = std::max(0.0, w + x);
        out.push_back(w);
    }
    return out;
}

MixtureStats simulate(const SystemConfig& config, const PeriodicPolicy& policy, const SimPlan& plan)
{
    validate(config);
    validate(plan, policy);
    if (plan.precheck_stability) {
        check_stability(config, policy);
    } else if (policy.types() != config.types || policy.replicas() != config.replicas) {
        throw ConfigError("policy does not match the system dimensions");
    }
    const Window window = measurement_window(plan, policy.period());

    std::vector<ReplicationRun> runs(static_cast<std::size_t>(plan.replications));
    parallel_for(plan.replications, plan.threads, [&](int rep) {
        runs[static_cast<std::size_t>(rep)] =
            run_replication(config, policy, plan, window, static_cast<std::uint64_t>(rep));
    });

    const int queue_count = policy.queue_count();
    const bool use_replications = plan.replications >= 8;
    MixtureStats out;
    Eigen::VectorXd weights(queue_count);
    Eigen::VectorXd means(queue_count);
    Eigen::VectorXd variances(queue_count);
    for (int i = 0; i < queue_count; ++i) {
        const QueueId id = QueueId::from_flat(i, policy.replicas());
        const Rational& q = policy.fractions()(id);
        QueueStats qs;
        qs.queue = id;
        qs.weight = static_cast<double>(q.numerator()) / static_cast<double>(q.denominator());

        RunningMoments waits;
        RunningMoments gaps;
        std::vector<double> estimates;
        std::vector<double> kept;
        const std::int64_t per_batch = window.batch_len / policy.period() * policy.visits(id);
        for (const auto& run : runs) {
            const QueueRun& r = run.queues[static_cast<std::size_t>(i)];
            waits.merge(r.waits);
            gaps.merge(r.gaps);
            if (use_replications) {
                estimates.push_back(r.waits.mean);
            } else if (per_batch > 0) {
                for (double s : r.batch_sums) {
                    estimates.push_back(s / static_cast<double>(per_batch));
                }
            }
            kept.insert(kept.end(), r.kept.begin(), r.kept.end());
        }
        qs.wait.mean = waits.mean;
        qs.wait.variance = waits.variance();
        qs.wait.n_samples = waits.n;
        qs.wait.ci_halfwidth = ci_halfwidth(estimates);
        if (!kept.empty()) {
            qs.wait.ecdf = quantile_table(EmpiricalCdf(std::move(kept)), plan.ecdf_resolution);
        }
        qs.gap_mean = gaps.mean;
        qs.gap_variance = gaps.variance();
        qs.gap_samples = gaps.n;

        weights(i) = qs.weight;
        means(i) = qs.wait.mean;
        variances(i) = qs.wait.variance;
        out.n_samples += qs.wait.n_samples;
        out.per_queue.push_back(std::move(qs));
    }
    out.mean = mixture_mean(weights, means);
    out.variance = mixture_variance(weights, means, variances);

    std::vector<double> estimates;
    for (const auto& run : runs) {
        if (use_replications) {
            double s = 0.0;
            for (double b : run.mixture_batches) {
                s += b;
            }
            estimates.push_back(s / static_cast<double>(run.mixture_batches.size()));
        } else {
            estimates.insert(estimates.end(), run.mixture_batches.begin(), run.mixture_batches.end());
        }
    }
    out.ci_halfwidth = ci_halfwidth(estimates);
    return out;
}

std::vector<double> queue_arrival_gaps(const SystemConfig& config, const PeriodicPolicy& policy, QueueId queue,
                                       std::int64_t count, std::uint64_t seed)
{
    validate(config);
    const std::int64_t visits = policy.visits(queue);
    if (visits == 0) {
        throw DomainError(fmt::format("queue ({},{}) is never visited", queue.type, queue.replica));
    }
    const int target = queue.flat_index(policy.replicas());
    const std::int64_t jobs = (count + 1 + visits - 1) / visits * policy.period() + policy.period();
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(count));
    run_system(config, policy, seed, 0, 0, jobs, [&](std::int64_t, int q, double, double gap) {
        if (q == target && !std::isnan(gap) && static_cast<std::int64_t>(out.size()) < count) {
            out.push_back(gap);
        }
    });
    return out;
}

std::vector<double> job_waits(const SystemConfig& config, const PeriodicPolicy& policy, std::int64_t first,
                              std::int64_t last, std::uint64_t seed, std::uint64_t replication, std::int64_t offset)
{
    validate(config);
    if (first < 0 || last < first) {
        throw ConfigError("job range must satisfy 0 <= first <= last");
    }
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(last - first));
    run_system(config, policy, seed, replication, offset, last, [&](std::int64_t n, int, double wait, double) {
        if (n >= first) {
            out.push_back(wait);
        }
    });
    return out;
}

MonotonicityResult monotonicity_check(const SystemConfig& config, const PeriodicPolicy& policy, JobRange early,
                                      JobRange late, int replications, std::uint64_t seed, double tolerance)
{
    check_stability(config, policy);
    if (replications < 1) {
        throw ConfigError("replications must be >= 1");
    }
    std::vector<double> early_waits;
    std::vector<double> late_waits;
    const std::int64_t horizon = std::max(early.last, late.last);
    for (int rep = 0; rep < replications; ++rep) {
        RandomStream offsets(seed, static_cast<std::uint64_t>(rep), kOffsetStream);
        const auto offset = static_cast<std::int64_t>(offsets.uniform_below(static_cast<std::uint64_t>(policy.period())));
        const auto waits = job_waits(config, policy, 0, horizon, seed, static_cast<std::uint64_t>(rep), offset);
        early_waits.insert(early_waits.end(), waits.begin() + early.first, waits.begin() + early.last);
        late_waits.insert(late_waits.end(), waits.begin() + late.first, waits.begin() + late.last);
    }
    MonotonicityResult result{EmpiricalCdf(std::move(early_waits)), EmpiricalCdf(std::move(late_waits))};
    result.shortfall = dominance_shortfall(result.early, result.late);
    result.dominated = result.shortfall <= tolerance;
    return result;
}

std::vector<SweepRow> convergence_sweep(const PeriodicPolicy& base, const SystemConfig& config_template,
                                        std::span<const int> k_list, const SimPlan& plan)
{
    if (base.policy_class() != PolicyClass::cp || base.replicas() != 1) {
        throw ConfigError("convergence_sweep needs a C_p base policy with k = 1");
    }
    const PVector p = base.type_sequence()->counts();
    const LimitSummary limit = limit_summary(p, config_template.lambda, config_template.service);
    std::vector<SweepRow> rows;
    for (int k : k_list) {
        SystemConfig config = config_template;
        config.replicas = k;
        const MixtureStats stats = simulate(config, scale_policy(base, k), plan);
        rows.push_back({k, stats.mean, stats.ci_halfwidth, stats.variance, limit.mixture_mean, limit.mixture_variance});
    }
    return rows;
}

std::vector<LowerBoundRow> lower_bound_check(const SystemConfig& config, const PVector& p,
                                             std::span<const PeriodicPolicy> policies, const SimPlan& plan)
{
    const double bound = limit_summary(p, config.lambda, config.service).mixture_mean;
    std::vector<LowerBoundRow> rows;
    int index = 0;
    for (const PeriodicPolicy& policy : policies) {
        if (!has_type_shares(policy.fractions(), p)) {
            throw ConfigError(fmt::format("policy {} does not send p_r/|p| of the jobs to each type", index));
        }
        SystemConfig c = config;
        c.replicas = policy.replicas();
        const MixtureStats stats = simulate(c, policy, plan);
        rows.push_back({index, policy.replicas(), stats.mean, stats.ci_halfwidth, bound,
                        stats.mean + 3.0 * stats.ci_halfwidth >= bound});
        ++index;
    }
    return rows;
}

}  // namespace perdisp
