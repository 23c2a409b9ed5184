#pragma once

#include <string>
#include <variant>

#include "perdisp/random.hpp"

namespace perdisp {

// Positive distributions for service times and inter-arrival increments.
// Every kind has closed-form raw moments of all orders we need (up to 5).

struct Deterministic {
    double value;
};

struct Exponential {
    double rate;
};

struct Erlang {
    int shape;
    double rate;  // rate of each phase; mean = shape / rate
};

/// Two-phase hyperexponential: rate1 with probability weight, rate2 otherwise.
struct HyperExponential2 {
    double weight;
    double rate1;
    double rate2;
};

struct UniformPositive {
    double lower;
    double upper;
};

using DistributionSpec = std::variant<Deterministic, Exponential, Erlang, HyperExponential2, UniformPositive>;

/// Throws ConfigError unless the support lies in (0, inf) and parameters are in range.
void validate(const DistributionSpec& spec);

std::string kind_name(const DistributionSpec& spec);

double mean(const DistributionSpec& spec);
double variance(const DistributionSpec& spec);

/// E[S^order] in closed form; order in 1..5.
double raw_moment(const DistributionSpec& spec, int order);

double cdf(const DistributionSpec& spec, double x);

/// E[S ; S <= x].
double partial_mean(const DistributionSpec& spec, double x);

/// P(S > x), computed without cancellation in the upper tail.
double survival(const DistributionSpec& spec, double x);

/// E[S ; S > x].
double tail_mean(const DistributionSpec& spec, double x);

/// E[exp(theta S)]; +inf where it diverges.
double mgf(const DistributionSpec& spec, double theta);

/// Smallest x (to bisection accuracy) with P(S > x) <= tail.
double upper_quantile(const DistributionSpec& spec, double tail);

/// Law of factor * S.
DistributionSpec rescaled(const DistributionSpec& spec, double factor);

double sample(const DistributionSpec& spec, RandomStream& stream);

enum class ArrivalCase { renewal, poisson, deterministic };

/// Dispatcher arrival process, described at unit scale.
struct ArrivalModel {
    ArrivalCase arrival_case = ArrivalCase::poisson;
    /// Only used for the renewal case; its shape is kept and its mean is rescaled.
    DistributionSpec base = Exponential{1.0};
};

std::string case_name(ArrivalCase c);
ArrivalCase parse_arrival_case(const std::string& name);

/// Inter-arrival law of the dispatcher at scale k: mean exactly 1/(lambda k).
DistributionSpec dispatcher_interarrival_spec(const ArrivalModel& model, double lambda, int k);

}  // namespace perdisp
