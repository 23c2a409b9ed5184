#include "perdisp/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <fmt/core.h>
#include <nlohmann/json.hpp>
#include <yaml-cpp/yaml.h>

#include "perdisp/errors.hpp"

namespace perdisp {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------- YAML input

Json scalar_to_json(const YAML::Node& node)
{
    const std::string& s = node.Scalar();
    if (node.Tag() == "!") {
        return s;  // quoted
    }
    if (s == "true" || s == "True") {
        return true;
    }
    if (s == "false" || s == "False") {
        return false;
    }
    if (s == "null" || s == "~" || s.empty()) {
        return nullptr;
    }
    std::int64_t i = 0;
    auto [iend, iec] = std::from_chars(s.data(), s.data() + s.size(), i);
    if (iec == std::errc{} && iend == s.data() + s.size()) {
        return i;
    }
    double d = 0.0;
    auto [dend, dec] = std::from_chars(s.data(), s.data() + s.size(), d);
    if (dec == std::errc{} && dend == s.data() + s.size()) {
        return d;
    }
    return s;
}

Json yaml_to_json(const YAML::Node& node)
{
    switch (node.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined:
        return nullptr;
    case YAML::NodeType::Scalar:
        return scalar_to_json(node);
    case YAML::NodeType::Sequence: {
        Json arr = Json::array();
        for (const auto& child : node) {
            arr.push_back(yaml_to_json(child));
        }
        return arr;
    }
    case YAML::NodeType::Map: {
        Json obj = Json::object();
        for (const auto& kv : node) {
            obj[kv.first.as<std::string>()] = yaml_to_json(kv.second);
        }
        return obj;
    }
    }
    return nullptr;
}

// ------------------------------------------------------------ schema helpers

class Reader {
public:
    Reader(const Json& j, std::string path) : json_(j), path_(std::move(path))
    {
        if (!j.is_object()) {
            throw ConfigError(fmt::format("{}: expected a mapping", label()));
        }
    }

    [[nodiscard]] bool has(const std::string& key) const { return json_.contains(key); }

    const Json& at(const std::string& key)
    {
        if (!json_.contains(key)) {
            throw ConfigError(fmt::format("{}: missing required key '{}'", label(), key));
        }
        seen_.insert(key);
        return json_.at(key);
    }

    [[nodiscard]] std::string child_path(const std::string& key) const
    {
        return path_.empty() ? key : path_ + "." + key;
    }

    double number(const std::string& key)
    {
        const Json& v = at(key);
        if (!v.is_number()) {
            throw ConfigError(fmt::format("{}: expected a number", child_path(key)));
        }
        return v.get<double>();
    }
    double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

    std::int64_t integer(const std::string& key)
    {
        const Json& v = at(key);
        if (!v.is_number_integer()) {
            throw ConfigError(fmt::format("{}: expected an integer", child_path(key)));
        }
        return v.get<std::int64_t>();
    }
    std::int64_t integer(const std::string& key, std::int64_t fallback) { return has(key) ? integer(key) : fallback; }

    bool boolean(const std::string& key, bool fallback)
    {
        if (!has(key)) {
            return fallback;
        }
        const Json& v = at(key);
        if (!v.is_boolean()) {
            throw ConfigError(fmt::format("{}: expected true or false", child_path(key)));
        }
        return v.get<bool>();
    }

    std::string text(const std::string& key)
    {
        const Json& v = at(key);
        if (!v.is_string()) {
            throw ConfigError(fmt::format("{}: expected a string", child_path(key)));
        }
        return v.get<std::string>();
    }
    std::string text(const std::string& key, const std::string& fallback) { return has(key) ? text(key) : fallback; }

    std::vector<int> int_list(const std::string& key)
    {
        const Json& v = at(key);
        if (!v.is_array()) {
            throw ConfigError(fmt::format("{}: expected a list of integers", child_path(key)));
        }
        std::vector<int> out;
        for (const auto& e : v) {
            if (!e.is_number_integer()) {
                throw ConfigError(fmt::format("{}: expected a list of integers", child_path(key)));
            }
            out.push_back(e.get<int>());
        }
        return out;
    }

    std::vector<std::vector<int>> int_rows(const std::string& key)
    {
        const Json& v = at(key);
        const std::string msg = fmt::format("{}: expected a list of integer lists", child_path(key));
        if (!v.is_array()) {
            throw ConfigError(msg);
        }
        std::vector<std::vector<int>> out;
        for (const auto& row : v) {
            if (!row.is_array()) {
                throw ConfigError(msg);
            }
            std::vector<int> r;
            for (const auto& e : row) {
                if (!e.is_number_integer()) {
                    throw ConfigError(msg);
                }
                r.push_back(e.get<int>());
            }
            out.push_back(std::move(r));
        }
        return out;
    }

    std::vector<double> number_list(const std::string& key)
    {
        const Json& v = at(key);
        if (!v.is_array()) {
            throw ConfigError(fmt::format("{}: expected a list of numbers", child_path(key)));
        }
        std::vector<double> out;
        for (const auto& e : v) {
            if (!e.is_number()) {
                throw ConfigError(fmt::format("{}: expected a list of numbers", child_path(key)));
            }
            out.push_back(e.get<double>());
        }
        return out;
    }

    void finish() const
    {
        for (const auto& [key, value] : json_.items()) {
            if (!seen_.contains(key)) {
                throw ConfigError(fmt::format("{}: unknown key '{}'", label(), key));
            }
        }
    }

private:
    [[nodiscard]] std::string label() const { return path_.empty() ? "config" : path_; }

    const Json& json_;
    std::string path_;
    std::set<std::string> seen_;
};

void require(bool ok, const std::string& message)
{
    if (!ok) {
        throw ConfigError(message);
    }
}

// ------------------------------------------------------------- distributions

DistributionSpec parse_distribution(const Json& j, const std::string& path)
{
    Reader in(j, path);
    const std::string kind = in.text("kind");
    DistributionSpec spec;
    if (kind == "deterministic") {
        spec = Deterministic{in.number("value")};
    } else if (kind == "exponential") {
        spec = Exponential{in.number("rate")};
    } else if (kind == "erlang") {
        spec = Erlang{static_cast<int>(in.integer("shape")), in.number("rate")};
    } else if (kind == "hyperexponential2") {
        spec = HyperExponential2{in.number("weight"), in.number("rate1"), in.number("rate2")};
    } else if (kind == "uniform") {
        spec = UniformPositive{in.number("lower"), in.number("upper")};
    } else {
        throw ConfigError(fmt::format(
            "{}.kind: unknown distribution '{}' (deterministic, exponential, erlang, hyperexponential2, uniform)", path,
            kind));
    }
    in.finish();
    try {
        validate(spec);
    } catch (const ConfigError& e) {
        throw ConfigError(fmt::format("{}: {}", path, e.what()));
    }
    return spec;
}

OrderedJson distribution_json(const DistributionSpec& spec)
{
    return std::visit(
        [](const auto& d) -> OrderedJson {
            using T = std::decay_t<decltype(d)>;
            OrderedJson j;
            if constexpr (std::is_same_v<T, Deterministic>) {
                j["kind"] = "deterministic";
                j["value"] = d.value;
            } else if constexpr (std::is_same_v<T, Exponential>) {
                j["kind"] = "exponential";
                j["rate"] = d.rate;
            } else if constexpr (std::is_same_v<T, Erlang>) {
                j["kind"] = "erlang";
                j["shape"] = d.shape;
                j["rate"] = d.rate;
            } else if constexpr (std::is_same_v<T, HyperExponential2>) {
                j["kind"] = "hyperexponential2";
                j["weight"] = d.weight;
                j["rate1"] = d.rate1;
                j["rate2"] = d.rate2;
            } else {
                j["kind"] = "uniform";
                j["lower"] = d.lower;
                j["upper"] = d.upper;
            }
            return j;
        },
        spec);
}

// ------------------------------------------------------------------ sections

Scenario parse_scenario(const std::string& name)
{
    static const std::pair<const char*, Scenario> names[] = {
        {"simulate", Scenario::simulate},   {"sweep", Scenario::sweep},
        {"lower-bound", Scenario::lower_bound}, {"analytic", Scenario::analytic},
        {"optimize", Scenario::optimize},   {"verify-structure", Scenario::verify_structure},
        {"monotonicity", Scenario::monotonicity},
    };
    for (const auto& [n, s] : names) {
        if (name == n) {
            return s;
        }
    }
    throw ConfigError(fmt::format("scenario: unknown value '{}'", name));
}

SystemConfig parse_system(const Json& j)
{
    Reader in(j, "system");
    SystemConfig sys;
    const Json& services = in.at("service");
    require(services.is_array() && !services.empty(), "system.service: expected a non-empty list of distributions");
    for (std::size_t r = 0; r < services.size(); ++r) {
        sys.service.push_back(parse_distribution(services[r], fmt::format("system.service[{}]", r)));
    }
    sys.types = static_cast<int>(in.integer("types", static_cast<std::int64_t>(services.size())));
    require(sys.types == static_cast<int>(services.size()),
            fmt::format("system.types = {} but {} service laws are given", sys.types, services.size()));
    sys.replicas = static_cast<int>(in.integer("replicas", 1));
    sys.lambda = in.number("lambda");
    if (in.has("arrival")) {
        Reader arr(in.at("arrival"), "system.arrival");
        try {
            sys.arrival.arrival_case = parse_arrival_case(arr.text("case", "poisson"));
        } catch (const ConfigError& e) {
            throw ConfigError(fmt::format("system.arrival.case: {}", e.what()));
        }
        if (sys.arrival.arrival_case == ArrivalCase::renewal) {
            sys.arrival.base = parse_distribution(arr.at("base"), "system.arrival.base");
        }
        arr.finish();
    }
    in.finish();
    try {
        validate(sys);
    } catch (const ConfigError& e) {
        throw ConfigError(fmt::format("system: {}", e.what()));
    }
    return sys;
}

OrderedJson system_json(const SystemConfig& sys)
{
    OrderedJson j;
    j["types"] = sys.types;
    j["replicas"] = sys.replicas;
    j["lambda"] = sys.lambda;
    OrderedJson arr;
    arr["case"] = case_name(sys.arrival.arrival_case);
    if (sys.arrival.arrival_case == ArrivalCase::renewal) {
        arr["base"] = distribution_json(sys.arrival.base);
    }
    j["arrival"] = arr;
    OrderedJson services = OrderedJson::array();
    for (const auto& s : sys.service) {
        services.push_back(distribution_json(s));
    }
    j["service"] = services;
    return j;
}

PolicyDescriptor parse_policy(const Json& j, const std::string& path)
{
    Reader in(j, path);
    PolicyDescriptor d;
    const std::string kind = in.text("kind");
    if (kind == "cp") {
        d.kind = PolicyDescriptor::Kind::cp;
        d.type_sequence = in.int_list("type_sequence");
    } else if (kind == "q") {
        d.kind = PolicyDescriptor::Kind::q;
        const Json& rows = in.at("q");
        require(rows.is_array() && !rows.empty(), fmt::format("{}.q: expected a list of rows", path));
        for (const auto& row : rows) {
            require(row.is_array() && !row.empty(), fmt::format("{}.q: every row must be a non-empty list", path));
            std::vector<std::string> cells;
            for (const auto& cell : row) {
                if (cell.is_string()) {
                    cells.push_back(cell.get<std::string>());
                } else if (cell.is_number_integer()) {
                    cells.push_back(std::to_string(cell.get<std::int64_t>()));
                } else {
                    throw ConfigError(fmt::format("{}.q: entries must be integers or fraction strings like \"3/4\"", path));
                }
            }
            d.q.push_back(std::move(cells));
        }
        const std::int64_t seed = in.integer("seed", 1);
        require(seed >= 0, fmt::format("{}.seed: must be >= 0", path));
        d.seed = static_cast<std::uint64_t>(seed);
    } else {
        throw ConfigError(fmt::format("{}.kind: expected 'cp' or 'q', got '{}'", path, kind));
    }
    in.finish();
    return d;
}

OrderedJson policy_json(const PolicyDescriptor& d)
{
    OrderedJson j;
    if (d.kind == PolicyDescriptor::Kind::cp) {
        j["kind"] = "cp";
        j["type_sequence"] = d.type_sequence;
    } else {
        j["kind"] = "q";
        j["q"] = d.q;
        j["seed"] = d.seed;
    }
    return j;
}

Rational parse_rational(const std::string& s, const std::string& path)
{
    const auto slash = s.find('/');
    auto to_int = [&](std::string_view part) {
        std::int64_t v = 0;
        auto [end, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
        if (ec != std::errc{} || end != part.data() + part.size()) {
            throw ConfigError(fmt::format("{}: '{}' is not a fraction", path, s));
        }
        return v;
    };
    const std::string_view view(s);
    const std::int64_t num = to_int(view.substr(0, slash));
    const std::int64_t den = slash == std::string::npos ? 1 : to_int(view.substr(slash + 1));
    if (den == 0) {
        throw ConfigError(fmt::format("{}: zero denominator in '{}'", path, s));
    }
    return Rational(num, den);
}

SimPlan parse_plan(const Json* j)
{
    SimPlan plan;
    if (j == nullptr) {
        return plan;
    }
    Reader in(*j, "plan");
    plan.jobs_total = in.integer("jobs_total", plan.jobs_total);
    plan.warmup_fraction = in.number("warmup_fraction", plan.warmup_fraction);
    plan.replications = static_cast<int>(in.integer("replications", plan.replications));
    plan.batch_count = static_cast<int>(in.integer("batch_count", plan.batch_count));
    plan.ecdf_resolution = static_cast<int>(in.integer("ecdf_resolution", plan.ecdf_resolution));
    plan.ecdf_sample_cap = in.integer("ecdf_sample_cap", plan.ecdf_sample_cap);
    plan.precheck_stability = in.boolean("precheck_stability", plan.precheck_stability);
    in.finish();
    return plan;
}

OrderedJson plan_json(const SimPlan& plan)
{
    OrderedJson j;
    j["jobs_total"] = plan.jobs_total;
    j["warmup_fraction"] = plan.warmup_fraction;
    j["replications"] = plan.replications;
    j["batch_count"] = plan.batch_count;
    j["ecdf_resolution"] = plan.ecdf_resolution;
    j["ecdf_sample_cap"] = plan.ecdf_sample_cap;
    j["precheck_stability"] = plan.precheck_stability;
    return j;
}

std::string method_name(WaitMethod m)
{
    switch (m) {
    case WaitMethod::automatic:
        return "automatic";
    case WaitMethod::grid:
        return "grid";
    case WaitMethod::exact:
        return "exact";
    }
    return "automatic";
}

bool uses_policy(Scenario s)
{
    return s == Scenario::simulate || s == Scenario::sweep || s == Scenario::monotonicity;
}

bool uses_plan(Scenario s)
{
    return s == Scenario::simulate || s == Scenario::sweep || s == Scenario::lower_bound;
}

const char* settings_key(Scenario s)
{
    switch (s) {
    case Scenario::sweep:
        return "sweep";
    case Scenario::lower_bound:
        return "lower_bound";
    case Scenario::analytic:
        return "analytic";
    case Scenario::optimize:
        return "optimize";
    case Scenario::verify_structure:
        return "verify_structure";
    case Scenario::monotonicity:
        return "monotonicity";
    case Scenario::simulate:
        break;
    }
    return nullptr;
}

PVector analytic_p(const ExperimentConfig& c)
{
    if (!c.analytic.p.empty()) {
        return PVector(c.analytic.p);
    }
    if (c.policy && c.policy->kind == PolicyDescriptor::Kind::cp) {
        return TypeSequence(c.policy->type_sequence).counts();
    }
    throw ConfigError("analytic.p: required unless a cp policy is given");
}

PVector lower_bound_p(const ExperimentConfig& c, const std::vector<PeriodicPolicy>& policies)
{
    if (!c.lower_bound.p.empty()) {
        return PVector(c.lower_bound.p);
    }
    // smallest integer vector proportional to the first policy's type shares
    const auto& f = policies.front().fractions();
    std::int64_t den = 1;
    for (int r = 1; r <= f.types(); ++r) {
        den = std::lcm(den, f.type_share(r).denominator());
    }
    std::vector<int> p;
    for (int r = 1; r <= f.types(); ++r) {
        const Rational share = f.type_share(r);
        p.push_back(static_cast<int>(share.numerator() * (den / share.denominator())));
    }
    return PVector(p);
}

void validate_semantics(const ExperimentConfig& c)
{
    const int types = c.system.types;
    if (uses_policy(c.scenario)) {
        const int k = c.scenario == Scenario::sweep ? 1 : c.system.replicas;
        const PeriodicPolicy policy = build_policy(*c.policy, types, k);
        if (c.scenario == Scenario::sweep) {
            require(policy.policy_class() == PolicyClass::cp, "policy: the sweep scenario needs a cp policy");
            require(!c.sweep.k_list.empty(), "sweep.k_list: must not be empty");
            for (int k : c.sweep.k_list) {
                require(k >= 1, "sweep.k_list: entries must be >= 1");
            }
            if (!c.sweep.sequences.empty()) {
                require(c.sweep.sequences.size() == c.sweep.k_list.size(),
                        "sweep.sequences: need one type word per entry of k_list");
                const PVector p = policy.type_sequence()->counts();
                for (const auto& word : c.sweep.sequences) {
                    const TypeSequence seq(word);
                    require(seq.types() <= types && seq.counts() == p,
                            "sweep.sequences: every word must have the type counts of policy.type_sequence");
                }
            }
        }
        validate(c.plan, policy);
    }
    switch (c.scenario) {
    case Scenario::lower_bound: {
        require(!c.lower_bound.policies.empty(), "lower_bound.policies: must list at least one policy");
        std::vector<PeriodicPolicy> built;
        for (const auto& d : c.lower_bound.policies) {
            built.push_back(build_policy(d, types, c.system.replicas));
            validate(c.plan, built.back());
        }
        const PVector p = lower_bound_p(c, built);
        require(p.types() == types, "lower_bound.p: length must equal system.types");
        for (const auto& policy : built) {
            require(has_type_shares(policy.fractions(), p),
                    "lower_bound.policies: every policy must send p_r/|p| of the jobs to type r");
        }
        break;
    }
    case Scenario::analytic: {
        const PVector p = analytic_p(c);
        require(p.types() == types, "analytic.p: length must equal system.types");
        require(c.analytic.grid_step >= 0.0, "analytic.grid_step: must be >= 0");
        require(c.analytic.tail_mass > 0.0 && c.analytic.tail_mass < 1.0, "analytic.tail_mass: must be in (0,1)");
        require(c.analytic.tolerance > 0.0, "analytic.tolerance: must be > 0");
        break;
    }
    case Scenario::optimize:
        require(c.optimize.slack > 0.0 && c.optimize.slack < 1.0, "optimize.slack: must be in (0,1)");
        require(c.optimize.tolerance > 0.0, "optimize.tolerance: must be > 0");
        require(c.optimize.max_iterations >= 1, "optimize.max_iterations: must be >= 1");
        require(c.optimize.max_norm >= types, "optimize.max_norm: must be at least system.types");
        require(c.optimize.start.empty() || static_cast<int>(c.optimize.start.size()) == types,
                "optimize.start: length must equal system.types");
        break;
    case Scenario::verify_structure: {
        const PVector p(c.structure.p);
        require(p.norm() <= c.structure.sequence_cap,
                fmt::format("verify_structure.p: |p| = {} exceeds sequence_cap = {}", p.norm(), c.structure.sequence_cap));
        require(c.structure.m_max >= 2, "verify_structure.m_max: must be >= 2");
        require(c.structure.limit_multiplier >= 1, "verify_structure.limit_multiplier: must be >= 1");
        require(c.structure.ratio_tolerance > 0.0, "verify_structure.ratio_tolerance: must be > 0");
        for (int k : c.structure.k_list) {
            require(k >= 1, "verify_structure.k_list: entries must be >= 1");
        }
        break;
    }
    case Scenario::monotonicity: {
        const auto& m = c.monotonicity;
        require(m.early_first >= 0 && m.early_first < m.early_last, "monotonicity.early: need 0 <= first < last");
        require(m.late_first >= 0 && m.late_first < m.late_last, "monotonicity.late: need 0 <= first < last");
        require(m.replications >= 1, "monotonicity.replications: must be >= 1");
        require(m.tolerance >= 0.0, "monotonicity.tolerance: must be >= 0");
        require(m.cdf_points >= 2, "monotonicity.cdf_points: must be >= 2");
        break;
    }
    default:
        break;
    }
}

ExperimentConfig parse_json(const Json& root)
{
    Reader in(root, "");
    ExperimentConfig c;
    c.scenario = parse_scenario(in.text("scenario"));
    const std::int64_t seed = in.integer("seed", 1);
    require(seed >= 0, "seed: must be >= 0");
    c.seed = static_cast<std::uint64_t>(seed);
    c.system = parse_system(in.at("system"));

    if (uses_policy(c.scenario)) {
        c.policy = parse_policy(in.at("policy"), "policy");
    } else if (in.has("policy")) {
        if (c.scenario != Scenario::analytic) {
            throw ConfigError(fmt::format("policy: not used by the {} scenario", scenario_name(c.scenario)));
        }
        c.policy = parse_policy(in.at("policy"), "policy");
    }

    if (uses_plan(c.scenario)) {
        c.plan = parse_plan(in.has("plan") ? &in.at("plan") : nullptr);
    } else if (in.has("plan")) {
        throw ConfigError(fmt::format("plan: not used by the {} scenario", scenario_name(c.scenario)));
    }
    c.plan.seed = c.seed;

    for (Scenario s : {Scenario::sweep, Scenario::lower_bound, Scenario::analytic, Scenario::optimize,
                       Scenario::verify_structure, Scenario::monotonicity}) {
        if (s != c.scenario && in.has(settings_key(s))) {
            throw ConfigError(
                fmt::format("{}: not used by the {} scenario", settings_key(s), scenario_name(c.scenario)));
        }
    }
    const char* key = settings_key(c.scenario);
    const Json empty = Json::object();
    const Json& section = key != nullptr && in.has(key) ? in.at(key) : empty;
    const std::string path = key != nullptr ? key : "";

    switch (c.scenario) {
    case Scenario::simulate:
        break;
    case Scenario::sweep: {
        Reader s(section, path);
        if (s.has("k_list")) {
            c.sweep.k_list = s.int_list("k_list");
        }
        if (s.has("sequences")) {
            c.sweep.sequences = s.int_rows("sequences");
        }
        s.finish();
        break;
    }
    case Scenario::lower_bound: {
        Reader s(section, path);
        if (s.has("p")) {
            c.lower_bound.p = s.int_list("p");
        }
        const Json& list = s.at("policies");
        require(list.is_array(), "lower_bound.policies: expected a list");
        for (std::size_t i = 0; i < list.size(); ++i) {
            c.lower_bound.policies.push_back(parse_policy(list[i], fmt::format("lower_bound.policies[{}]", i)));
        }
        s.finish();
        break;
    }
    case Scenario::analytic: {
        Reader s(section, path);
        if (s.has("p")) {
            c.analytic.p = s.int_list("p");
        }
        const std::string m = s.text("method", "automatic");
        if (m == "automatic") {
            c.analytic.method = WaitMethod::automatic;
        } else if (m == "grid") {
            c.analytic.method = WaitMethod::grid;
        } else if (m == "exact") {
            c.analytic.method = WaitMethod::exact;
        } else {
            throw ConfigError(fmt::format("analytic.method: expected automatic, grid or exact, got '{}'", m));
        }
        c.analytic.grid_step = s.number("grid_step", c.analytic.grid_step);
        c.analytic.tail_mass = s.number("tail_mass", c.analytic.tail_mass);
        c.analytic.tolerance = s.number("tolerance", c.analytic.tolerance);
        c.analytic.export_grid = s.boolean("export_grid", c.analytic.export_grid);
        s.finish();
        if (c.analytic.p.empty()) {
            c.analytic.p = analytic_p(c).counts();
        }
        break;
    }
    case Scenario::optimize: {
        Reader s(section, path);
        c.optimize.slack = s.number("slack", c.optimize.slack);
        c.optimize.tolerance = s.number("tolerance", c.optimize.tolerance);
        c.optimize.max_iterations = static_cast<int>(s.integer("max_iterations", c.optimize.max_iterations));
        c.optimize.max_norm = static_cast<int>(s.integer("max_norm", c.optimize.max_norm));
        if (s.has("start")) {
            c.optimize.start = s.number_list("start");
        }
        s.finish();
        break;
    }
    case Scenario::verify_structure: {
        Reader s(section, path);
        if (s.has("p")) {
            c.structure.p = s.int_list("p");
        }
        c.structure.m_max = static_cast<int>(s.integer("m_max", c.structure.m_max));
        if (s.has("k_list")) {
            c.structure.k_list = s.int_list("k_list");
        }
        c.structure.limit_multiplier = static_cast<int>(s.integer("limit_multiplier", c.structure.limit_multiplier));
        c.structure.ratio_tolerance = s.number("ratio_tolerance", c.structure.ratio_tolerance);
        c.structure.sequence_cap = static_cast<int>(s.integer("sequence_cap", c.structure.sequence_cap));
        s.finish();
        break;
    }
    case Scenario::monotonicity: {
        Reader s(section, path);
        auto range = [&](const char* name, std::int64_t& first, std::int64_t& last) {
            if (!s.has(name)) {
                return;
            }
            const Json& v = s.at(name);
            require(v.is_array() && v.size() == 2 && v[0].is_number_integer() && v[1].is_number_integer(),
                    fmt::format("monotonicity.{}: expected [first, last) as two integers", name));
            first = v[0].get<std::int64_t>();
            last = v[1].get<std::int64_t>();
        };
        range("early", c.monotonicity.early_first, c.monotonicity.early_last);
        range("late", c.monotonicity.late_first, c.monotonicity.late_last);
        c.monotonicity.replications = static_cast<int>(s.integer("replications", c.monotonicity.replications));
        c.monotonicity.tolerance = s.number("tolerance", c.monotonicity.tolerance);
        c.monotonicity.cdf_points = static_cast<int>(s.integer("cdf_points", c.monotonicity.cdf_points));
        s.finish();
        break;
    }
    }
    in.finish();
    validate_semantics(c);
    return c;
}

OrderedJson effective_json(const ExperimentConfig& c)
{
    OrderedJson j;
    j["scenario"] = scenario_name(c.scenario);
    j["seed"] = c.seed;
    j["system"] = system_json(c.system);
    if (c.policy) {
        j["policy"] = policy_json(*c.policy);
    }
    if (uses_plan(c.scenario)) {
        j["plan"] = plan_json(c.plan);
    }
    OrderedJson s = OrderedJson::object();
    switch (c.scenario) {
    case Scenario::simulate:
        break;
    case Scenario::sweep:
        s["k_list"] = c.sweep.k_list;
        if (!c.sweep.sequences.empty()) {
            s["sequences"] = c.sweep.sequences;
        }
        break;
    case Scenario::lower_bound: {
        if (!c.lower_bound.p.empty()) {
            s["p"] = c.lower_bound.p;
        }
        OrderedJson list = OrderedJson::array();
        for (const auto& d : c.lower_bound.policies) {
            list.push_back(policy_json(d));
        }
        s["policies"] = list;
        break;
    }
    case Scenario::analytic:
        s["p"] = c.analytic.p;
        s["method"] = method_name(c.analytic.method);
        s["grid_step"] = c.analytic.grid_step;
        s["tail_mass"] = c.analytic.tail_mass;
        s["tolerance"] = c.analytic.tolerance;
        s["export_grid"] = c.analytic.export_grid;
        break;
    case Scenario::optimize:
        s["slack"] = c.optimize.slack;
        s["tolerance"] = c.optimize.tolerance;
        s["max_iterations"] = c.optimize.max_iterations;
        s["max_norm"] = c.optimize.max_norm;
        if (!c.optimize.start.empty()) {
            s["start"] = c.optimize.start;
        }
        break;
    case Scenario::verify_structure:
        s["p"] = c.structure.p;
        s["m_max"] = c.structure.m_max;
        s["k_list"] = c.structure.k_list;
        s["limit_multiplier"] = c.structure.limit_multiplier;
        s["ratio_tolerance"] = c.structure.ratio_tolerance;
        s["sequence_cap"] = c.structure.sequence_cap;
        break;
    case Scenario::monotonicity:
        s["early"] = {c.monotonicity.early_first, c.monotonicity.early_last};
        s["late"] = {c.monotonicity.late_first, c.monotonicity.late_last};
        s["replications"] = c.monotonicity.replications;
        s["tolerance"] = c.monotonicity.tolerance;
        s["cdf_points"] = c.monotonicity.cdf_points;
        break;
    }
    if (const char* key = settings_key(c.scenario)) {
        j[key] = s;
    }
    return j;
}

// ------------------------------------------------------------------- outputs

std::string fnv1a(const std::string& bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return fmt::format("{:016x}", h);
}

OrderedJson header_json(const ExperimentConfig& c)
{
    OrderedJson h;
    h["tool"] = "perdisp";
    h["version"] = PERDISP_VERSION;
    h["config_hash"] = config_hash(c);
    h["seed"] = c.seed;
    return h;
}

class ArtifactWriter {
public:
    ArtifactWriter(const ExperimentConfig& config, std::filesystem::path dir, RunReport& report)
        : config_(config), dir_(std::move(dir)), report_(report), header_(artifact_header(config))
    {
    }

    void csv(const std::string& name, const std::string& columns, const std::vector<std::string>& rows)
    {
        std::string body = header_ + columns + "\n";
        for (const auto& row : rows) {
            body += row;
            body += '\n';
        }
        write(name, body);
    }

    void json(const std::string& name, OrderedJson payload)
    {
        OrderedJson doc;
        doc["header"] = header_json(config_);
        for (auto& [key, value] : payload.items()) {
            doc[key] = value;
        }
        write(name, doc.dump(2) + "\n");
    }

private:
    void write(const std::string& name, const std::string& body)
    {
        const auto path = dir_ / name;
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error(fmt::format("cannot write {}", path.string()));
        }
        out << body;
        report_.files.push_back(path);
    }

    const ExperimentConfig& config_;
    std::filesystem::path dir_;
    RunReport& report_;
    std::string header_;
};

std::string num(double v) { return fmt::format("{}", v); }

void add_check(RunReport& report, std::string name, bool passed, std::string detail)
{
    report.checks.push_back({std::move(name), passed, std::move(detail)});
}

// ----------------------------------------------------------------- scenarios

OrderedJson run_simulate(const ExperimentConfig& c, const SimPlan& plan, ArtifactWriter& out, RunReport& report)
{
    const PeriodicPolicy policy = build_policy(*c.policy, c.system.types, c.system.replicas);
    const MixtureStats stats = simulate(c.system, policy, plan);

    std::vector<std::string> rows;
    std::vector<std::string> ecdf_rows;
    Eigen::VectorXd w(static_cast<Eigen::Index>(stats.per_queue.size()));
    Eigen::VectorXd m(w.size());
    for (std::size_t i = 0; i < stats.per_queue.size(); ++i) {
        const auto& q = stats.per_queue[i];
        rows.push_back(fmt::format("{},{},{},{},{},{},{},{},{}", q.queue.type, q.queue.replica, num(q.weight),
                                   num(q.wait.mean), num(q.wait.variance), num(q.wait.ci_halfwidth),
                                   q.wait.n_samples, num(q.gap_mean), num(q.gap_variance)));
        for (const auto& point : q.wait.ecdf) {
            ecdf_rows.push_back(
                fmt::format("{},{},{},{}", q.queue.type, q.queue.replica, num(point.value), num(point.probability)));
        }
        w(static_cast<Eigen::Index>(i)) = q.weight;
        m(static_cast<Eigen::Index>(i)) = q.wait.mean;
    }
    out.csv("per_queue.csv", "r,kappa,weight,mean,variance,ci_halfwidth,n,gap_mean,gap_variance", rows);
    out.csv("ecdf.csv", "r,kappa,t,F", ecdf_rows);

    const double weighted = mixture_mean(w, m);
    const double gap = std::abs(stats.mean - weighted);
    add_check(report, "mixture_identity", gap <= 1e-12 * std::max(1.0, std::abs(stats.mean)),
              fmt::format("|mean - sum q mean_q| = {}", num(gap)));

    OrderedJson r;
    r["mean"] = stats.mean;
    r["variance"] = stats.variance;
    r["ci_halfwidth"] = stats.ci_halfwidth;
    r["n_samples"] = stats.n_samples;
    r["period"] = policy.period();
    if (policy.policy_class() == PolicyClass::cp) {
        try {
            const LimitSummary limit = limit_summary(policy.type_sequence()->counts(), c.system.lambda, c.system.service);
            r["limit_mean"] = limit.mixture_mean;
            r["limit_variance"] = limit.mixture_variance;
        } catch (const DomainError&) {
        }
    }
    return r;
}

OrderedJson run_sweep(const ExperimentConfig& c, const SimPlan& plan, ArtifactWriter& out, RunReport& report)
{
    const bool natural = c.sweep.sequences.empty();
    std::vector<SweepRow> rows;
    if (natural) {
        rows = convergence_sweep(build_policy(*c.policy, c.system.types, 1), c.system, c.sweep.k_list, plan);
    } else {
        for (std::size_t i = 0; i < c.sweep.k_list.size(); ++i) {
            const int k[] = {c.sweep.k_list[i]};
            const auto base = build_cpk(TypeSequence(c.sweep.sequences[i]), 1);
            rows.push_back(convergence_sweep(base, c.system, k, plan).front());
        }
    }
    std::vector<std::string> lines;
    bool above = true;
    std::string below;
    for (const auto& row : rows) {
        lines.push_back(fmt::format("{},{},{},{},{},{}", row.k, num(row.mean), num(row.ci_halfwidth), num(row.variance),
                                    num(row.analytic_mean), num(row.analytic_variance)));
        if (row.mean < row.analytic_mean - 3.0 * row.ci_halfwidth) {
            above = false;
            below += fmt::format(" k={}", row.k);
        }
    }
    out.csv("sweep.csv", "k,mean,ci_halfwidth,variance,analytic_mean,analytic_variance", lines);
    add_check(report, "lower_bound", above,
              above ? "every mean >= limit - 3 ci" : "below limit - 3 ci at" + below);
    const auto& last = rows.back();
    const double err = std::abs(last.mean - last.analytic_mean);
    const double allowed = std::max(3.0 * last.ci_halfwidth, 0.05 * last.analytic_mean);
    add_check(report, "limit", err <= allowed,
              fmt::format("k={}: |mean - limit| = {} vs allowed {}", last.k, num(err), num(allowed)));
    OrderedJson r;
    r["scaling"] = natural ? "natural" : "per_k";
    r["limit_mean"] = last.analytic_mean;
    r["limit_variance"] = last.analytic_variance;
    r["largest_k_mean"] = last.mean;
    r["largest_k_ci_halfwidth"] = last.ci_halfwidth;
    return r;
}

OrderedJson run_lower_bound(const ExperimentConfig& c, const SimPlan& plan, ArtifactWriter& out, RunReport& report)
{
    std::vector<PeriodicPolicy> policies;
    for (const auto& d : c.lower_bound.policies) {
        policies.push_back(build_policy(d, c.system.types, c.system.replicas));
    }
    const PVector p = lower_bound_p(c, policies);
    const auto rows = lower_bound_check(c.system, p, policies, plan);
    std::vector<std::string> lines;
    bool all = true;
    for (const auto& row : rows) {
        lines.push_back(fmt::format("{},{},{},{},{},{}", row.policy_index, row.k, num(row.mean), num(row.ci_halfwidth),
                                    num(row.bound), row.consistent ? 1 : 0));
        all = all && row.consistent;
    }
    out.csv("lower_bound.csv", "policy,k,mean,ci_halfwidth,bound,consistent", lines);
    add_check(report, "lower_bound", all, "mean + 3 ci >= limit for every policy");
    OrderedJson r;
    r["p"] = p.counts();
    r["bound"] = rows.front().bound;
    return r;
}

OrderedJson run_analytic(const ExperimentConfig& c, ArtifactWriter& out, RunReport& report)
{
    AnalyticOptions opts;
    opts.method = c.analytic.method;
    opts.grid.grid_step = c.analytic.grid_step;
    opts.grid.tail_mass = c.analytic.tail_mass;
    opts.grid.tolerance = c.analytic.tolerance;
    const PVector p(c.analytic.p);
    const LimitSummary summary = limit_summary(p, c.system.lambda, c.system.service, opts);
    std::vector<std::string> lines;
    double within = 0.0;
    for (std::size_t r = 0; r < summary.per_type.size(); ++r) {
        const auto& t = summary.per_type[r];
        lines.push_back(fmt::format("{},{},{},{},{}", r + 1, num(t.weight), num(t.interarrival), num(t.mean),
                                    num(t.variance)));
        within += t.weight * t.variance;
    }
    out.csv("limit.csv", "r,weight,interarrival,mean,variance", lines);
    if (c.analytic.export_grid) {
        for (std::size_t r = 0; r < summary.per_type.size(); ++r) {
            const Dgi1Result grid = dgi1_wait(summary.per_type[r].interarrival, c.system.service[r], opts.grid);
            std::vector<std::string> g;
            for (Eigen::Index i = 0; i < grid.mass.size(); ++i) {
                if (grid.mass(i) > 0.0) {
                    g.push_back(fmt::format("{},{}", num(static_cast<double>(i) * grid.grid_step), num(grid.mass(i))));
                }
            }
            out.csv(fmt::format("wait_grid_r{}.csv", r + 1), "t,mass", g);
        }
    }
    add_check(report, "between_type_term_nonnegative", summary.mixture_variance >= within - 1e-12 * std::abs(within),
              fmt::format("variance {} vs within-type {}", num(summary.mixture_variance), num(within)));
    OrderedJson r;
    r["p"] = p.counts();
    r["mixture_mean"] = summary.mixture_mean;
    r["mixture_variance"] = summary.mixture_variance;
    return r;
}

OrderedJson run_optimize(const ExperimentConfig& c, ArtifactWriter& out, RunReport& report)
{
    const FeasibleSet set = make_feasible_set(c.system.lambda, c.system.service, c.optimize.slack);
    OptimizerOptions opts;
    opts.tolerance = c.optimize.tolerance;
    opts.max_iterations = c.optimize.max_iterations;
    if (!c.optimize.start.empty()) {
        opts.start = Eigen::Map<const Eigen::VectorXd>(c.optimize.start.data(),
                                                       static_cast<Eigen::Index>(c.optimize.start.size()));
    }
    const OptimizationResult result = minimize(set, c.system.service, opts);
    const PVector p = rationalize(result.x_opt, c.optimize.max_norm, c.system.lambda, c.system.service);

    std::string columns = "iteration";
    for (int r = 1; r <= c.system.types; ++r) {
        columns += fmt::format(",x_{}", r);
    }
    columns += ",value,gradient_norm";
    std::vector<std::string> lines;
    for (const auto& point : result.trajectory) {
        std::string line = std::to_string(point.iteration);
        for (Eigen::Index r = 0; r < point.x.size(); ++r) {
            line += "," + num(point.x(r));
        }
        line += "," + num(point.value) + "," + num(point.gradient_norm);
        lines.push_back(std::move(line));
    }
    out.csv("trajectory.csv", columns, lines);
    add_check(report, "converged", result.converged, fmt::format("{} iterations", result.iterations));
    add_check(report, "feasible", set.contains(result.x_opt, 1e-12), "x_opt inside the slack-shrunk stable simplex");

    OrderedJson r;
    r["x_opt"] = std::vector<double>(result.x_opt.data(), result.x_opt.data() + result.x_opt.size());
    r["value"] = result.value;
    r["iterations"] = result.iterations;
    r["certificate"] = result.certificate;
    r["p"] = p.counts();
    Eigen::VectorXd frac(p.types());
    for (int i = 0; i < p.types(); ++i) {
        frac(i) = static_cast<double>(p.counts()[static_cast<std::size_t>(i)]) / p.norm();
    }
    r["p_value"] = objective(frac, c.system.lambda, c.system.service);
    return r;
}

OrderedJson run_structure(const ExperimentConfig& c, ArtifactWriter& out, RunReport& report)
{
    const PVector p(c.structure.p);
    const auto sequences = enumerate_type_sequences(p, c.structure.sequence_cap);
    const std::int64_t cardinality = cp_cardinality(p);
    const std::int64_t k_limit = c.structure.limit_multiplier * lcm_of(p);
    const std::vector<int> k_limit_list{static_cast<int>(k_limit)};

    std::vector<std::string> lines;
    int fact1_total = 0;
    bool sums_ok = true;
    double worst_ratio = 0.0;
    for (const auto& seq : sequences) {
        std::string word;
        for (int t : seq.word()) {
            word += std::to_string(t);
        }
        for (int r = 1; r <= p.types(); ++r) {
            const int violations = fact1_violations(seq, r, c.structure.m_max);
            fact1_total += violations;
            bool seq_sums = true;
            for (int k : c.structure.k_list) {
                const PeriodicPolicy policy = build_cpk(seq, k);
                for (int kappa = 1; kappa <= k; ++kappa) {
                    const auto prof = pattern_profile(policy, QueueId{r, kappa});
                    std::int64_t sum = 0;
                    for (auto g : prof.gaps) {
                        sum += g;
                    }
                    seq_sums = seq_sums && sum == static_cast<std::int64_t>(k) * p.norm();
                }
            }
            sums_ok = sums_ok && seq_sums;
            const double target = static_cast<double>(p.norm()) / p[r];
            double ratio_err = 0.0;
            for (int j = 1; j <= p[r]; ++j) {
                const double ratio = gap_ratio_series(seq, r, j, k_limit_list).front();
                ratio_err = std::max(ratio_err, std::abs(ratio - target) / target);
            }
            worst_ratio = std::max(worst_ratio, ratio_err);
            lines.push_back(fmt::format("{},{},{},{},{}", word, r, violations, seq_sums ? 1 : 0, num(ratio_err)));
        }
    }
    out.csv("structure.csv", "sequence,r,fact1_violations,gap_sums_ok,max_ratio_error", lines);
    add_check(report, "fact1", fact1_total == 0, fmt::format("{} violations", fact1_total));
    add_check(report, "cardinality", static_cast<std::int64_t>(sequences.size()) == cardinality,
              fmt::format("enumerated {} vs formula {}", sequences.size(), cardinality));
    add_check(report, "gap_sums", sums_ok, "sum_j a_jr = k |p| for every queue");
    add_check(report, "gap_ratio_limit", worst_ratio <= c.structure.ratio_tolerance,
              fmt::format("max relative error {} at k = {}", num(worst_ratio), k_limit));
    OrderedJson r;
    r["p"] = p.counts();
    r["cardinality"] = cardinality;
    r["enumerated"] = sequences.size();
    r["fact1_violations"] = fact1_total;
    r["max_ratio_error"] = worst_ratio;
    return r;
}

OrderedJson run_monotonicity(const ExperimentConfig& c, ArtifactWriter& out, RunReport& report)
{
    const auto& m = c.monotonicity;
    const PeriodicPolicy policy = build_policy(*c.policy, c.system.types, c.system.replicas);
    const MonotonicityResult result = monotonicity_check(c.system, policy, {m.early_first, m.early_last},
                                                         {m.late_first, m.late_last}, m.replications, c.seed,
                                                         m.tolerance);
    const double hi = std::max(result.early.max(), result.late.max());
    std::vector<std::string> lines;
    for (int i = 0; i < m.cdf_points; ++i) {
        const double t = hi * static_cast<double>(i) / (m.cdf_points - 1);
        lines.push_back(fmt::format("{},{},{}", num(t), num(result.early(t)), num(result.late(t))));
    }
    out.csv("monotonicity.csv", "t,F_early,F_late", lines);
    add_check(report, "stochastic_order", result.dominated,
              fmt::format("sup(F_late - F_early) = {} vs tolerance {}", num(result.shortfall), num(m.tolerance)));
    OrderedJson r;
    r["shortfall"] = result.shortfall;
    r["early_samples"] = result.early.size();
    r["late_samples"] = result.late.size();
    return r;
}

}  // namespace

// ---------------------------------------------------------------- public API

std::string scenario_name(Scenario s)
{
    switch (s) {
    case Scenario::simulate:
        return "simulate";
    case Scenario::sweep:
        return "sweep";
    case Scenario::lower_bound:
        return "lower-bound";
    case Scenario::analytic:
        return "analytic";
    case Scenario::optimize:
        return "optimize";
    case Scenario::verify_structure:
        return "verify-structure";
    case Scenario::monotonicity:
        return "monotonicity";
    }
    return "simulate";
}

PeriodicPolicy build_policy(const PolicyDescriptor& d, int types, int replicas)
{
    require(replicas >= 1, "replicas must be >= 1");
    if (d.kind == PolicyDescriptor::Kind::cp) {
        const TypeSequence seq(d.type_sequence);
        require(seq.types() == types,
                fmt::format("policy.type_sequence uses {} types but system.types = {}", seq.types(), types));
        return build_cpk(seq, replicas);
    }
    require(static_cast<int>(d.q.size()) == types,
            fmt::format("policy.q has {} rows but system.types = {}", d.q.size(), types));
    std::vector<Rational> q;
    for (std::size_t r = 0; r < d.q.size(); ++r) {
        require(static_cast<int>(d.q[r].size()) == replicas,
                fmt::format("policy.q row {} has {} entries but replicas = {}", r + 1, d.q[r].size(), replicas));
        for (const auto& cell : d.q[r]) {
            q.push_back(parse_rational(cell, fmt::format("policy.q row {}", r + 1)));
        }
    }
    return random_q_policy(RoutingFractions(types, replicas, std::move(q)), d.seed);
}

ExperimentConfig parse_config(const std::string& text)
{
    Json root;
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        try {
            root = Json::parse(text);
        } catch (const Json::parse_error& e) {
            throw ConfigError(fmt::format("JSON syntax: {}", e.what()));
        }
    } else {
        try {
            root = yaml_to_json(YAML::Load(text));
        } catch (const YAML::Exception& e) {
            throw ConfigError(fmt::format("YAML syntax: {}", e.what()));
        }
    }
    return parse_json(root);
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError(fmt::format("cannot read config file '{}'", path.string()));
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string effective_config_json(const ExperimentConfig& config) { return effective_json(config).dump(); }

std::string config_hash(const ExperimentConfig& config) { return fnv1a(effective_config_json(config)); }

std::string artifact_header(const ExperimentConfig& config)
{
    return fmt::format("# perdisp {} config_hash={} seed={}\n", PERDISP_VERSION, config_hash(config), config.seed);
}

bool RunReport::all_passed() const
{
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

RunReport run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir, int threads)
{
    if (threads < 1) {
        throw ConfigError(fmt::format("threads must be >= 1, got {}", threads));
    }
    RunReport report;
    SimPlan plan = config.plan;
    plan.threads = threads;

    std::filesystem::create_directories(out_dir);
    ArtifactWriter out(config, out_dir, report);
    out.json("effective_config.json", OrderedJson{{"config", effective_json(config)}});

    OrderedJson results;
    switch (config.scenario) {
    case Scenario::simulate:
        results = run_simulate(config, plan, out, report);
        break;
    case Scenario::sweep:
        results = run_sweep(config, plan, out, report);
        break;
    case Scenario::lower_bound:
        results = run_lower_bound(config, plan, out, report);
        break;
    case Scenario::analytic:
        results = run_analytic(config, out, report);
        break;
    case Scenario::optimize:
        results = run_optimize(config, out, report);
        break;
    case Scenario::verify_structure:
        results = run_structure(config, out, report);
        break;
    case Scenario::monotonicity:
        results = run_monotonicity(config, out, report);
        break;
    }

    OrderedJson checks = OrderedJson::array();
    for (const auto& c : report.checks) {
        checks.push_back(OrderedJson{{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    }
    OrderedJson summary;
    summary["scenario"] = scenario_name(config.scenario);
    summary["results"] = results;
    summary["checks"] = checks;
    summary["passed"] = report.all_passed();
    out.json("summary.json", summary);
    return report;
}

std::string policy_csv(const PeriodicPolicy& policy, const std::string& header)
{
    std::string body = header + "n,r,kappa\n";
    for (std::int64_t n = 0; n < policy.period(); ++n) {
        const QueueId q = policy.queue_at(n);
        body += fmt::format("{},{},{}\n", n + 1, q.type, q.replica);
    }
    return body;
}

}  // namespace perdisp
