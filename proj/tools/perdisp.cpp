#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "perdisp/errors.hpp"
#include "perdisp/experiment.hpp"

namespace {

enum ExitCode { ok = 0, checks_failed = 1, config_error = 2, unstable = 3, numeric = 4 };

std::vector<int> parse_word(const std::string& text)
{
    std::vector<int> word;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        try {
            std::size_t used = 0;
            word.push_back(std::stoi(item, &used));
            if (used != item.size()) {
                throw std::invalid_argument(item);
            }
        } catch (const std::exception&) {
            throw perdisp::ConfigError(fmt::format("--sequence: '{}' is not an integer", item));
        }
    }
    return word;
}

void print_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    std::cout << in.rdbuf();
}

template <typename Fn>
int guarded(Fn&& fn)
{
    try {
        return fn();
    } catch (const perdisp::ConfigError& e) {
        std::cerr << "perdisp: configuration error: " << e.what() << '\n';
        return config_error;
    } catch (const perdisp::DomainError& e) {
        std::cerr << "perdisp: configuration error: " << e.what() << '\n';
        return config_error;
    } catch (const perdisp::InstabilityError& e) {
        std::cerr << "perdisp: unstable system: " << e.what() << '\n';
        return unstable;
    } catch (const perdisp::InfeasibleError& e) {
        std::cerr << "perdisp: infeasible: " << e.what() << '\n';
        return unstable;
    } catch (const perdisp::NumericError& e) {
        std::cerr << "perdisp: numeric failure: " << e.what() << '\n';
        return numeric;
    } catch (const std::exception& e) {
        std::cerr << "perdisp: " << e.what() << '\n';
        return numeric;
    }
}

perdisp::ExperimentConfig load(const std::string& path, std::optional<std::uint64_t> seed)
{
    auto config = perdisp::load_config(path);
    if (seed) {
        config.seed = *seed;
        config.plan.seed = *seed;
    }
    return config;
}

int report_checks(const perdisp::RunReport& report)
{
    for (const auto& c : report.checks) {
        std::cerr << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
    }
    return report.all_passed() ? ok : checks_failed;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Periodic dispatching to parallel FCFS queues: simulation, limits and routing optimization"};
    app.set_version_flag("--version", std::string("perdisp ") + PERDISP_VERSION);
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    int threads = 1;

    auto add_common = [&](CLI::App* cmd, bool out_required) {
        cmd->add_option("--config", config_path, "Experiment config (YAML or JSON)")->required()->check(CLI::ExistingFile);
        auto* out = cmd->add_option("--out", out_dir, "Output directory");
        if (out_required) {
            out->required();
        }
        cmd->add_option("--seed", seed, "Override the config seed");
        cmd->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
    };

    auto* run = app.add_subcommand("run", "Run the scenario named in the config");
    add_common(run, true);

    auto* analytic = app.add_subcommand("analytic", "Limiting waiting-time summary for an analytic config");
    add_common(analytic, false);

    auto* optimize = app.add_subcommand("optimize", "Optimal routing fractions for an optimize config");
    add_common(optimize, false);

    auto* policy = app.add_subcommand("policy", "Routing policy utilities");
    policy->require_subcommand(1);
    auto* dump = policy->add_subcommand("dump", "Print one period of a policy as CSV (n, r, kappa)");
    std::string dump_config;
    std::string sequence;
    int dump_k = 1;
    auto* dump_cfg_opt = dump->add_option("--config", dump_config, "Config with a policy section")
                             ->check(CLI::ExistingFile);
    auto* seq_opt = dump->add_option("--sequence", sequence, "Type word such as 1,1,2");
    dump->add_option("--k", dump_k, "Replicas per type (with --sequence)")->check(CLI::PositiveNumber);
    dump_cfg_opt->excludes(seq_opt);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (*run) {
        return guarded([&] {
            const auto config = load(config_path, seed);
            return report_checks(perdisp::run_experiment(config, out_dir, threads));
        });
    }
    if (*analytic || *optimize) {
        const bool is_analytic = static_cast<bool>(*analytic);
        return guarded([&] {
            const auto config = load(config_path, seed);
            const auto wanted = is_analytic ? perdisp::Scenario::analytic : perdisp::Scenario::optimize;
            if (config.scenario != wanted) {
                throw perdisp::ConfigError(fmt::format("config scenario is '{}', expected '{}'",
                                                       perdisp::scenario_name(config.scenario),
                                                       perdisp::scenario_name(wanted)));
            }
            const std::filesystem::path dir =
                out_dir.empty() ? std::filesystem::temp_directory_path() / "perdisp" / perdisp::config_hash(config)
                                : std::filesystem::path(out_dir);
            const auto report = perdisp::run_experiment(config, dir, threads);
            if (is_analytic) {
                print_file(dir / "limit.csv");
            }
            print_file(dir / "summary.json");
            if (!is_analytic) {
                print_file(dir / "trajectory.csv");
            }
            return report_checks(report);
        });
    }
    if (*dump) {
        return guarded([&] {
            if (!dump_config.empty()) {
                const auto config = perdisp::load_config(dump_config);
                if (!config.policy) {
                    throw perdisp::ConfigError("config has no policy section");
                }
                const int k = config.scenario == perdisp::Scenario::sweep ? dump_k : config.system.replicas;
                const auto p = perdisp::build_policy(*config.policy, config.system.types, k);
                std::cout << perdisp::policy_csv(p, perdisp::artifact_header(config));
                return 0;
            }
            if (sequence.empty()) {
                throw perdisp::ConfigError("policy dump needs --config or --sequence");
            }
            const auto p = perdisp::build_cpk(perdisp::TypeSequence(parse_word(sequence)), dump_k);
            std::cout << perdisp::policy_csv(p, fmt::format("# perdisp {} sequence={} k={}\n", PERDISP_VERSION,
                                                            sequence, dump_k));
            return 0;
        });
    }
    return 0;
}
