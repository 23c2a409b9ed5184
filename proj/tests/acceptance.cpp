// Acceptance driver: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "oracles.hpp"
#include "perdisp/analytic.hpp"
#include "perdisp/optimizer.hpp"
#include "perdisp/policy.hpp"
#include "perdisp/simulator.hpp"

namespace fs = std::filesystem;
using namespace perdisp;

namespace {

struct Outcome {
    bool passed = true;
    std::string detail;

    void require(bool ok, const std::string& what)
    {
        if (!ok) {
            passed = false;
            detail += (detail.empty() ? "" : "; ") + what;
        }
    }
    void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

/// Every vector of positive ints with sum <= max_norm.
std::vector<std::vector<int>> compositions(int max_norm)
{
    std::vector<std::vector<int>> out;
    std::function<void(std::vector<int>&, int)> grow = [&](std::vector<int>& cur, int left) {
        if (!cur.empty()) {
            out.push_back(cur);
        }
        for (int c = 1; c <= left; ++c) {
            cur.push_back(c);
            grow(cur, left - c);
            cur.pop_back();
        }
    };
    std::vector<int> cur;
    grow(cur, max_norm);
    return out;
}

SystemConfig two_type_system(double mu2)
{
    SystemConfig c;
    c.types = 2;
    c.replicas = 1;
    c.lambda = 1.2;
    c.arrival.arrival_case = ArrivalCase::poisson;
    c.service = {Exponential{1.0}, Exponential{mu2}};
    return c;
}

SimPlan long_plan(std::int64_t jobs, std::uint64_t seed)
{
    SimPlan plan;
    plan.jobs_total = jobs;
    plan.seed = seed;
    plan.batch_count = 32;
    return plan;
}

Outcome structural()
{
    Outcome out;
    const auto t0 = Clock::now();

    std::int64_t sequences = 0;
    int fact1_bad = 0;
    int gap_bad = 0;
    for (const auto& counts : compositions(6)) {
        const PVector p(counts);
        for (const auto& seq : enumerate_type_sequences(p)) {
            ++sequences;
            for (int r = 1; r <= p.types(); ++r) {
                fact1_bad += fact1_violations(seq, r, 20);
            }
            for (int k : {1, 2, 3, 5}) {
                const auto policy = build_cpk(seq, k);
                for (int r = 1; r <= p.types(); ++r) {
                    for (int kappa = 1; kappa <= k; ++kappa) {
                        const auto gaps = pattern_profile(policy, {r, kappa}).gaps;
                        std::int64_t sum = 0;
                        for (auto g : gaps) {
                            sum += g;
                        }
                        if (sum != static_cast<std::int64_t>(k) * p.norm() ||
                            gaps != oracle::two_tier_gaps(seq.word(), k, r, kappa)) {
                            ++gap_bad;
                        }
                    }
                }
            }
        }
    }
    out.require(fact1_bad == 0, fmt::format("{} round-robin identity violations", fact1_bad));
    out.require(gap_bad == 0, fmt::format("{} queues with wrong gaps", gap_bad));

    int card_bad = 0;
    for (const auto& counts : compositions(8)) {
        const PVector p(counts);
        const auto n = static_cast<std::int64_t>(enumerate_type_sequences(p).size());
        const auto expected = static_cast<std::int64_t>(std::llround(oracle::multinomial(counts)));
        if (n != expected || cp_cardinality(p) != expected) {
            ++card_bad;
        }
    }
    out.require(card_bad == 0, fmt::format("{} p vectors with wrong cardinality", card_bad));

    double worst_ratio = 0.0;
    for (const auto& counts : std::vector<std::vector<int>>{{1, 1}, {2, 1}, {3, 2}}) {
        const PVector p(counts);
        const int k = static_cast<int>(1000 * lcm_of(p));
        for (const auto& seq : enumerate_type_sequences(p)) {
            for (int r = 1; r <= p.types(); ++r) {
                const double target = static_cast<double>(p.norm()) / p[r];
                for (int j = 1; j <= p[r]; ++j) {
                    const int ks[] = {k};
                    const double ratio = gap_ratio_series(seq, r, j, ks).front();
                    worst_ratio = std::max(worst_ratio, std::abs(ratio - target) / target);
                }
            }
        }
    }
    out.require(worst_ratio <= 0.01, fmt::format("gap ratio off by {:.4g}", worst_ratio));

    const double elapsed = seconds_since(t0);
    out.require(elapsed < 1.0, fmt::format("took {:.2f} s", elapsed));
    out.note(fmt::format("{} sequences, worst ratio error {:.2e}, {:.2f} s", sequences, worst_ratio, elapsed));
    return out;
}

Outcome analytic_solvers()
{
    Outcome out;
    const auto t0 = Clock::now();

    const auto d = dm1_wait(2.0, 1.0);
    const double residual = std::abs(d.sigma - std::exp(-2.0 * (1.0 - d.sigma)));
    out.require(residual < 1e-12, fmt::format("sigma residual {:.3g}", residual));

    std::mt19937_64 rng(20240611);
    std::exponential_distribution<double> service(1.0);
    const auto waits = oracle::lindley_waits(1'010'000, 10'000, [&] { return service(rng); }, [] { return 2.0; });
    const auto mc = oracle::batch_means(waits, 50);
    out.require(std::abs(mc.mean - d.mean) <= 3.0 * mc.half_width,
                fmt::format("D/M/1 mean {:.5f} vs MC {:.5f} +- {:.5f}", d.mean, mc.mean, mc.half_width));

    double worst = 0.0;
    for (double rho_inv : {1.2, 2.0, 5.0}) {
        const double grid = dgi1_wait(rho_inv, Exponential{1.0}).mean;
        const double exact = dm1_wait(rho_inv, 1.0).mean;
        worst = std::max(worst, std::abs(grid - exact) / exact);
    }
    out.require(worst < 1e-4, fmt::format("grid vs D/M/1 relative error {:.3g}", worst));

    const auto dd1 = dgi1_wait(2.0, Deterministic{1.5});
    out.require(dd1.mean == 0.0 && dd1.variance == 0.0,
                fmt::format("D/D/1 mean {} variance {}", dd1.mean, dd1.variance));

    const double elapsed = seconds_since(t0);
    out.require(elapsed < 10.0, fmt::format("took {:.2f} s", elapsed));
    out.note(fmt::format("sigma residual {:.1e}, MC {:.4f}+-{:.4f} vs {:.4f}, grid rel err {:.1e}, {:.2f} s",
                         residual, mc.mean, mc.half_width, d.mean, worst, elapsed));
    return out;
}

Outcome mean_convergence()
{
    Outcome out;
    const auto config = two_type_system(1.0);
    const auto base = build_cpk(TypeSequence({1, 1, 2}), 1);
    const int ks[] = {1, 2, 4, 8, 16, 32};
    const auto rows = convergence_sweep(base, config, ks, long_plan(20'000'000, 31));
    const double limit = rows.front().analytic_mean;
    for (const auto& row : rows) {
        out.require(row.mean >= limit - 3.0 * row.ci_halfwidth,
                    fmt::format("k={} mean {:.4f} below {:.4f} - 3*{:.4f}", row.k, row.mean, limit, row.ci_halfwidth));
    }
    const auto& last = rows.back();
    const double allowed = std::max(3.0 * last.ci_halfwidth, 0.05 * limit);
    const double gap = std::abs(last.mean - limit);
    out.require(gap <= allowed, fmt::format("k=32 |mean - limit| {:.4f} > {:.4f}", gap, allowed));
    out.note(fmt::format("limit {:.4f}, k=1 {:.4f}, k=32 {:.4f}+-{:.4f}", limit, rows.front().mean, last.mean,
                         last.ci_halfwidth));
    return out;
}

Outcome variance_convergence()
{
    Outcome out;
    const auto config = two_type_system(0.8);
    const auto base = build_cpk(TypeSequence({1, 1, 2}), 1);
    const int ks[] = {32};
    const auto row = convergence_sweep(base, config, ks, long_plan(40'000'000, 41)).front();
    const double rel = std::abs(row.variance - row.analytic_variance) / row.analytic_variance;
    out.require(rel <= 0.10, fmt::format("relative error {:.4f}", rel));
    out.note(fmt::format("Var k=32 {:.4f} vs limit {:.4f} (rel {:.3f})", row.variance, row.analytic_variance, rel));
    return out;
}

Outcome policy_equivalence()
{
    Outcome out;
    const auto config = [] {
        auto c = two_type_system(1.0);
        c.replicas = 32;
        return c;
    }();
    std::vector<MixtureStats> stats;
    std::string means;
    std::uint64_t seed = 51;
    for (const auto& seq : enumerate_type_sequences(PVector({2, 1}))) {
        stats.push_back(simulate(config, build_cpk(seq, 32), long_plan(20'000'000, seed++)));
        means += fmt::format("{}{:.4f}+-{:.4f}", means.empty() ? "" : ", ", stats.back().mean,
                             stats.back().ci_halfwidth);
    }
    out.require(stats.size() == 3, fmt::format("{} type sequences", stats.size()));
    for (std::size_t a = 0; a < stats.size(); ++a) {
        for (std::size_t b = a + 1; b < stats.size(); ++b) {
            const double combined = std::hypot(stats[a].ci_halfwidth, stats[b].ci_halfwidth);
            const double diff = std::abs(stats[a].mean - stats[b].mean);
            out.require(diff <= 3.0 * combined,
                        fmt::format("sequences {} and {} differ by {:.4f} > 3*{:.4f}", a + 1, b + 1, diff, combined));
        }
    }
    out.note("means " + means);
    return out;
}

Outcome lower_bound_strictness()
{
    Outcome out;
    SystemConfig config;
    config.types = 1;
    config.replicas = 2;
    config.lambda = 0.5;
    config.service = {Exponential{1.0}};
    const RoutingFractions q(1, 2, {Rational(3, 4), Rational(1, 4)});
    const std::vector<PeriodicPolicy> policies{random_q_policy(q, 61)};
    const auto row = lower_bound_check(config, PVector({1}), policies, long_plan(10'000'000, 62)).front();
    out.require(row.mean - row.bound > 3.0 * row.ci_halfwidth,
                fmt::format("mean {:.4f} not above {:.4f} + 3*{:.4f}", row.mean, row.bound, row.ci_halfwidth));
    out.note(fmt::format("mean {:.4f}+-{:.4f} vs balanced limit {:.4f}", row.mean, row.ci_halfwidth, row.bound));
    return out;
}

Outcome monotonicity()
{
    Outcome out;
    SystemConfig config;
    config.types = 1;
    config.replicas = 1;
    config.lambda = 0.8;
    config.service = {Exponential{1.0}};
    const auto policy = build_cpk(TypeSequence({1}), 1);
    const auto r = monotonicity_check(config, policy, {0, 1000}, {9999, 20000}, 200, 71, 0.02);
    out.require(r.dominated, fmt::format("sup(F_late - F_early) = {:.4f}", r.shortfall));
    out.note(fmt::format("sup(F_late - F_early) = {:.4f} at tolerance 0.02", r.shortfall));
    return out;
}

std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> feasible_pairs(const FeasibleSet& set, int count,
                                                                       std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> e(1.0);
    auto draw = [&] {
        for (;;) {
            Eigen::VectorXd x(set.types());
            for (int r = 0; r < set.types(); ++r) {
                x(r) = e(rng);
            }
            x /= x.sum();
            if (set.contains(x)) {
                return x;
            }
        }
    };
    std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> pairs;
    for (int i = 0; i < count; ++i) {
        Eigen::VectorXd a = draw();
        Eigen::VectorXd b = draw();
        pairs.emplace_back(std::move(a), std::move(b));
    }
    return pairs;
}

Outcome convexity_and_optimization()
{
    Outcome out;
    const auto t0 = Clock::now();

    double worst_violation = 0.0;
    for (const auto& s : {std::vector<DistributionSpec>{Exponential{1.0}, Exponential{0.8}},
                          std::vector<DistributionSpec>{Erlang{2, 2.0}, Erlang{2, 1.5}}}) {
        const FeasibleSet set = make_feasible_set(1.2, s);
        worst_violation = std::max(worst_violation, convexity_probe(s, 1.2, feasible_pairs(set, 100, 81), 9));
    }
    out.require(worst_violation <= 1e-6, fmt::format("convexity violation {:.3g}", worst_violation));

    const std::vector<DistributionSpec> sym{Exponential{1.0}, Exponential{1.0}};
    const auto r_sym = minimize(make_feasible_set(1.0, sym), sym);
    const double sym_err = std::max(std::abs(r_sym.x_opt(0) - 0.5), std::abs(r_sym.x_opt(1) - 0.5));
    out.require(sym_err <= 1e-3, fmt::format("symmetric optimum off by {:.3g}", sym_err));

    const double lambda = 1.2;
    const std::vector<DistributionSpec> asym{Exponential{1.0}, Erlang{2, 1.6}};
    const FeasibleSet set = make_feasible_set(lambda, asym);
    const auto r = minimize(set, asym);
    double grid_best = std::numeric_limits<double>::infinity();
    int beaten = 0;
    for (int i = 0; i < 1000; ++i) {
        Eigen::VectorXd x(2);
        x << i / 999.0, 1.0 - i / 999.0;
        if (!set.contains(x)) {
            continue;
        }
        const double v = objective(x, lambda, asym);
        grid_best = std::min(grid_best, v);
        if (r.value > v + 1e-6) {
            ++beaten;
        }
    }
    out.require(beaten == 0, fmt::format("{} grid points beat the optimizer", beaten));

    const double elapsed = seconds_since(t0);
    out.require(elapsed < 60.0, fmt::format("took {:.1f} s", elapsed));
    out.note(fmt::format("max violation {:.1e}, symmetric err {:.1e}, optimum {:.8f} at x1={:.5f} vs grid {:.8f}, {:.1f} s",
                         worst_violation, sym_err, r.value, r.x_opt(0), grid_best, elapsed));
    return out;
}

std::string slurp(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome determinism()
{
    Outcome out;
    const fs::path root = fs::temp_directory_path() / "perdisp_acceptance_determinism";
    fs::remove_all(root);
    fs::create_directories(root);

    const std::vector<std::pair<std::string, std::string>> configs{
        {"simulate.yaml", R"(scenario: simulate
seed: 91
system:
  types: 2
  replicas: 4
  lambda: 1.2
  service:
    - {kind: exponential, rate: 1.0}
    - {kind: erlang, shape: 2, rate: 1.6}
policy: {kind: cp, type_sequence: [1, 2, 1]}
plan: {jobs_total: 300000, replications: 4}
)"},
        {"sweep.yaml", R"(scenario: sweep
seed: 92
system:
  types: 2
  lambda: 1.2
  arrival: {case: renewal, base: {kind: hyperexponential2, weight: 0.3, rate1: 0.5, rate2: 2.0}}
  service:
    - {kind: exponential, rate: 1.0}
    - {kind: uniform, lower: 0.5, upper: 1.5}
policy: {kind: cp, type_sequence: [1, 1, 2]}
plan: {jobs_total: 200000}
sweep: {k_list: [1, 3, 8]}
)"},
        {"monotonicity.yaml", R"(scenario: monotonicity
seed: 93
system:
  types: 1
  lambda: 0.8
  service: [{kind: exponential, rate: 1.0}]
policy: {kind: cp, type_sequence: [1]}
monotonicity: {replications: 20}
)"},
    };

    int files = 0;
    for (const auto& [name, text] : configs) {
        {
            std::ofstream f(root / name, std::ios::binary);
            f << text;
        }
        std::vector<fs::path> dirs;
        for (const auto& [tag, threads] : std::vector<std::pair<std::string, int>>{{"a", 1}, {"b", 1}, {"c", 2}, {"d", 4}}) {
            const fs::path dir = root / (name + "." + tag);
            const std::string cmd = fmt::format("\"{}\" run --config \"{}\" --out \"{}\" --threads {} >/dev/null 2>&1",
                                                PERDISP_CLI_PATH, (root / name).string(), dir.string(), threads);
            const int raw = std::system(cmd.c_str());
            const int status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
            out.require(status == 0 || status == 1, fmt::format("{} with {} threads exited with status {}", name, threads, status));
            dirs.push_back(dir);
        }
        for (const auto& entry : fs::directory_iterator(dirs.front())) {
            const std::string reference = slurp(entry.path());
            ++files;
            for (std::size_t i = 1; i < dirs.size(); ++i) {
                const fs::path other = dirs[i] / entry.path().filename();
                out.require(fs::exists(other) && slurp(other) == reference,
                            fmt::format("{} differs in {}", entry.path().filename().string(), other.parent_path().string()));
            }
        }
    }
    out.require(files > 0, "no output files");
    out.note(fmt::format("{} files compared across 2 repeats and thread counts 1, 2, 4", files));
    return out;
}

}  // namespace

int main()
{
    struct Criterion {
        int id;
        const char* name;
        Outcome (*run)();
    };
    const Criterion criteria[] = {
        {1, "structural exactness", structural},
        {2, "analytic solver correctness", analytic_solvers},
        {3, "mean convergence to the limiting mixture", mean_convergence},
        {4, "variance convergence", variance_convergence},
        {5, "equivalence of type sequences", policy_equivalence},
        {6, "strict lower bound off the balanced class", lower_bound_strictness},
        {7, "stochastic monotonicity from empty", monotonicity},
        {8, "convexity and optimization", convexity_and_optimization},
        {9, "determinism across repeats and threads", determinism},
    };

    int failed = 0;
    for (const auto& c : criteria) {
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.passed = false;
            o.detail = std::string("exception: ") + e.what();
        }
        failed += o.passed ? 0 : 1;
        std::printf("%s criterion %d (%s): %s\n", o.passed ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(std::size(criteria)) - failed, std::size(criteria));
    return failed == 0 ? 0 : 1;
}
