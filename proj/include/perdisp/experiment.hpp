#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "perdisp/analytic.hpp"
#include "perdisp/optimizer.hpp"
#include "perdisp/policy.hpp"
#include "perdisp/simulator.hpp"

namespace perdisp {

enum class Scenario { simulate, sweep, lower_bound, analytic, optimize, verify_structure, monotonicity };

std::string scenario_name(Scenario s);

/// How a config names a routing policy.
///   cp: a type word; the policy is build_cpk(word, k).
///   q:  an R x k matrix of rationals (row per type), shuffled with `seed`.
struct PolicyDescriptor {
    enum class Kind { cp, q };
    Kind kind = Kind::cp;
    std::vector<int> type_sequence;
    std::vector<std::vector<std::string>> q;
    std::uint64_t seed = 1;
};

PeriodicPolicy build_policy(const PolicyDescriptor& descriptor, int types, int replicas);

/// Without `sequences` every k reuses the policy's type word (natural
/// scaling). Otherwise sequences[i] is the type word used at k_list[i]; all
/// words must share the policy's type counts.
struct SweepSettings {
    std::vector<int> k_list{1, 2, 4, 8, 16, 32};
    std::vector<std::vector<int>> sequences;
};

struct LowerBoundSettings {
    std::vector<int> p;  // empty: the type shares of the first policy
    std::vector<PolicyDescriptor> policies;
};

struct AnalyticSettings {
    std::vector<int> p;  // empty: counts of the cp policy's type word
    WaitMethod method = WaitMethod::automatic;
    double grid_step = 0.0;
    double tail_mass = 1e-10;
    double tolerance = 1e-10;
    bool export_grid = false;
};

struct OptimizeSettings {
    double slack = 1e-3;
    double tolerance = 1e-8;
    int max_iterations = 5000;
    int max_norm = 10;
    std::vector<double> start;
};

struct StructureSettings {
    std::vector<int> p{2, 1};
    int m_max = 20;
    std::vector<int> k_list{1, 2, 3, 4, 7};
    int limit_multiplier = 1000;
    double ratio_tolerance = 0.01;
    int sequence_cap = kDefaultSequenceCap;
};

struct MonotonicitySettings {
    std::int64_t early_first = 0;
    std::int64_t early_last = 1000;
    std::int64_t late_first = 10000;
    std::int64_t late_last = 20000;
    int replications = 200;
    double tolerance = 0.02;
    int cdf_points = 200;
};

/// One experiment. Worker count and output location are execution details
/// supplied at run time and do not enter the config or its hash.
struct ExperimentConfig {
    Scenario scenario = Scenario::simulate;
    std::uint64_t seed = 1;
    SystemConfig system;
    std::optional<PolicyDescriptor> policy;
    SimPlan plan;  // plan.seed mirrors `seed`
    SweepSettings sweep;
    LowerBoundSettings lower_bound;
    AnalyticSettings analytic;
    OptimizeSettings optimize;
    StructureSettings structure;
    MonotonicitySettings monotonicity;
};

/// Parses YAML, or JSON when the text is a JSON object, and validates the
/// schema. Throws ConfigError with a key path on any problem.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical JSON of the effective config, every default spelled out.
std::string effective_config_json(const ExperimentConfig& config);

/// 64-bit FNV-1a of effective_config_json, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct RunReport {
    std::vector<CheckResult> checks;
    std::vector<std::filesystem::path> files;
    [[nodiscard]] bool all_passed() const;
};

/// Runs the configured scenario and writes effective_config.json,
/// summary.json and the scenario's CSV files into `out_dir`.
RunReport run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir, int threads = 1);

/// One period of `policy` as CSV rows n,r,kappa (with header comment).
std::string policy_csv(const PeriodicPolicy& policy, const std::string& header);

/// Comment line that starts every CSV artifact.
std::string artifact_header(const ExperimentConfig& config);

}  // namespace perdisp
