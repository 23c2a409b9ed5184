#include "perdisp/distributions.hpp"

#include <cmath>
#include <limits>

#include <boost/math/special_functions/gamma.hpp>
#include <fmt/core.h>

#include "perdisp/errors.hpp"

namespace perdisp {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }

double factorial(int n)
{
    double f = 1.0;
    for (int i = 2; i <= n; ++i) {
        f *= i;
    }
    return f;
}

}  // namespace

void validate(const DistributionSpec& spec)
{
    std::visit(overloaded{
                   [](const Deterministic& d) {
                       if (!positive_finite(d.value)) {
                           throw ConfigError(fmt::format("deterministic value must be > 0, got {}", d.value));
                       }
                   },
                   [](const Exponential& e) {
                       if (!positive_finite(e.rate)) {
                           throw ConfigError(fmt::format("exponential rate must be > 0, got {}", e.rate));
                       }
                   },
                   [](const Erlang& e) {
                       if (e.shape < 1) {
                           throw ConfigError(fmt::format("erlang shape must be >= 1, got {}", e.shape));
                       }
                       if (!positive_finite(e.rate)) {
                           throw ConfigError(fmt::format("erlang rate must be > 0, got {}", e.rate));
                       }
                   },
                   [](const HyperExponential2& h) {
                       if (!(h.weight > 0.0 && h.weight < 1.0)) {
                           throw ConfigError(fmt::format("hyperexponential weight must be in (0,1), got {}", h.weight));
                       }
                       if (!positive_finite(h.rate1) || !positive_finite(h.rate2)) {
                           throw ConfigError("hyperexponential rates must be > 0");
                       }
                   },
                   [](const UniformPositive& u) {
                       if (!(std::isfinite(u.lower) && std::isfinite(u.upper) && 0.0 < u.lower && u.lower < u.upper)) {
                           throw ConfigError(fmt::format("uniform bounds must satisfy 0 < a < b, got a={} b={}",
                                                         u.lower, u.upper));
                       }
                   },
               },
               spec);
}

std::string kind_name(const DistributionSpec& spec)
{
    return std::visit(overloaded{
                          [](const Deterministic&) { return std::string("deterministic"); },
                          [](const Exponential&) { return std::string("exponential"); },
                          [](const Erlang&) { return std::string("erlang"); },
                          [](const HyperExponential2&) { return std::string("hyperexponential2"); },
                          [](const UniformPositive&) { return std::string("uniform"); },
                      },
                      spec);
}

double mean(const DistributionSpec& spec) { return raw_moment(spec, 1); }

double variance(const DistributionSpec& spec)
{
    return std::visit(overloaded{
                          [](const Deterministic&) { return 0.0; },
                          [](const Exponential& e) { return 1.0 / (e.rate * e.rate); },
                          [](const Erlang& e) { return e.shape / (e.rate * e.rate); },
                          [&spec](const HyperExponential2&) {
                              const double m1 = raw_moment(spec, 1);
                              return raw_moment(spec, 2) - m1 * m1;
                          },
                          [](const UniformPositive& u) {
                              const double w = u.upper - u.lower;
                              return w * w / 12.0;
                          },
                      },
                      spec);
}

double raw_moment(const DistributionSpec& spec, int order)
{
    if (order < 1 || order > 5) {
        throw ConfigError(fmt::format("raw moment order must be in 1..5, got {}", order));
    }
    validate(spec);
    const int n = order;
    return std::visit(overloaded{
                          [n](const Deterministic& d) { return std::pow(d.value, n); },
                          [n](const Exponential& e) { return factorial(n) / std::pow(e.rate, n); },
                          [n](const Erlang& e) {
                              double rising = 1.0;
                              for (int i = 0; i < n; ++i) {
                                  rising *= e.shape + i;
                              }
                              return rising / std::pow(e.rate, n);
                          },
                          [n](const HyperExponential2& h) {
                              return factorial(n) *
                                     (h.weight / std::pow(h.rate1, n) + (1.0 - h.weight) / std::pow(h.rate2, n));
                          },
                          [n](const UniformPositive& u) {
                              return (std::pow(u.upper, n + 1) - std::pow(u.lower, n + 1)) /
                                     ((n + 1) * (u.upper - u.lower));
                          },
                      },
                      spec);
}

double cdf(const DistributionSpec& spec, double x) { return 1.0 - survival(spec, x); }

double partial_mean(const DistributionSpec& spec, double x)
{
    return std::visit(
        overloaded{
            [x](const Deterministic& d) { return x >= d.value ? d.value : 0.0; },
            [x](const Exponential& e) { return x <= 0.0 ? 0.0 : boost::math::gamma_p(2.0, e.rate * x) / e.rate; },
            [x](const Erlang& e) {
                return x <= 0.0 ? 0.0 : e.shape / e.rate * boost::math::gamma_p(e.shape + 1.0, e.rate * x);
            },
            [x](const HyperExponential2& h) {
                if (x <= 0.0) {
                    return 0.0;
                }
                return h.weight * boost::math::gamma_p(2.0, h.rate1 * x) / h.rate1 +
                       (1.0 - h.weight) * boost::math::gamma_p(2.0, h.rate2 * x) / h.rate2;
            },
            [x](const UniformPositive& u) {
                if (x <= u.lower) {
                    return 0.0;
                }
                const double c = std::min(x, u.upper);
                return (c * c - u.lower * u.lower) / (2.0 * (u.upper - u.lower));
            },
        },
        spec);
}

double survival(const DistributionSpec& spec, double x)
{
    return std::visit(
        overloaded{
            [x](const Deterministic& d) { return x < d.value ? 1.0 : 0.0; },
            [x](const Exponential& e) { return x <= 0.0 ? 1.0 : std::exp(-e.rate * x); },
            [x](const Erlang& e) { return x <= 0.0 ? 1.0 : boost::math::gamma_q(static_cast<double>(e.shape), e.rate * x); },
            [x](const HyperExponential2& h) {
                if (x <= 0.0) {
                    return 1.0;
                }
                return h.weight * std::exp(-h.rate1 * x) + (1.0 - h.weight) * std::exp(-h.rate2 * x);
            },
            [x](const UniformPositive& u) { return std::clamp((u.upper - x) / (u.upper - u.lower), 0.0, 1.0); },
        },
        spec);
}

double tail_mean(const DistributionSpec& spec, double x)
{
    return std::visit(
        overloaded{
            [x](const Deterministic& d) { return x < d.value ? d.value : 0.0; },
            [x](const Exponential& e) { return x <= 0.0 ? 1.0 / e.rate : std::exp(-e.rate * x) * (x + 1.0 / e.rate); },
            [x](const Erlang& e) {
                return x <= 0.0 ? e.shape / e.rate : e.shape / e.rate * boost::math::gamma_q(e.shape + 1.0, e.rate * x);
            },
            [x](const HyperExponential2& h) {
                const double y = std::max(x, 0.0);
                return h.weight * std::exp(-h.rate1 * y) * (y + 1.0 / h.rate1) +
                       (1.0 - h.weight) * std::exp(-h.rate2 * y) * (y + 1.0 / h.rate2);
            },
            [x](const UniformPositive& u) {
                const double c = std::clamp(x, u.lower, u.upper);
                return (u.upper * u.upper - c * c) / (2.0 * (u.upper - u.lower));
            },
        },
        spec);
}

double mgf(const DistributionSpec& spec, double theta)
{
    constexpr double inf = std::numeric_limits<double>::infinity();
    return std::visit(overloaded{
                          [theta](const Deterministic& d) { return std::exp(theta * d.value); },
                          [theta](const Exponential& e) { return theta < e.rate ? e.rate / (e.rate - theta) : inf; },
                          [theta](const Erlang& e) {
                              return theta < e.rate ? std::pow(e.rate / (e.rate - theta), e.shape) : inf;
                          },
                          [theta](const HyperExponential2& h) {
                              if (theta >= h.rate1 || theta >= h.rate2) {
                                  return inf;
                              }
                              return h.weight * h.rate1 / (h.rate1 - theta) +
                                     (1.0 - h.weight) * h.rate2 / (h.rate2 - theta);
                          },
                          [theta](const UniformPositive& u) {
                              if (theta == 0.0) {
                                  return 1.0;
                              }
                              return (std::exp(theta * u.upper) - std::exp(theta * u.lower)) /
                                     (theta * (u.upper - u.lower));
                          },
                      },
                      spec);
}

double upper_quantile(const DistributionSpec& spec, double tail)
{
    if (const auto* d = std::get_if<Deterministic>(&spec)) {
        return d->value;
    }
    if (const auto* u = std::get_if<UniformPositive>(&spec)) {
        return u->upper - tail * (u->upper - u->lower);
    }
    double lo = 0.0;
    double hi = mean(spec);
    while (survival(spec, hi) > tail) {
        lo = hi;
        hi *= 2.0;
    }
    for (int i = 0; i < 200 && hi - lo > 1e-12 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        (survival(spec, mid) > tail ? lo : hi) = mid;
    }
    return hi;
}

DistributionSpec rescaled(const DistributionSpec& spec, double factor)
{
    if (!positive_finite(factor)) {
        throw ConfigError(fmt::format("rescale factor must be > 0, got {}", factor));
    }
    return std::visit(overloaded{
                          [factor](const Deterministic& d) -> DistributionSpec {
                              return Deterministic{d.value * factor};
                          },
                          [factor](const Exponential& e) -> DistributionSpec {
                              return Exponential{e.rate / factor};
                          },
                          [factor](const Erlang& e) -> DistributionSpec {
                              return Erlang{e.shape, e.rate / factor};
                          },
                          [factor](const HyperExponential2& h) -> DistributionSpec {
                              return HyperExponential2{h.weight, h.rate1 / factor, h.rate2 / factor};
                          },
                          [factor](const UniformPositive& u) -> DistributionSpec {
                              return UniformPositive{u.lower * factor, u.upper * factor};
                          },
                      },
                      spec);
}

double sample(const DistributionSpec& spec, RandomStream& stream)
{
    return std::visit(overloaded{
                          [](const Deterministic& d) { return d.value; },
                          [&stream](const Exponential& e) { return -std::log(stream.uniform_open()) / e.rate; },
                          [&stream](const Erlang& e) {
                              double acc = 0.0;
                              for (int i = 0; i < e.shape; ++i) {
                                  acc -= std::log(stream.uniform_open());
                              }
                              return acc / e.rate;
                          },
                          [&stream](const HyperExponential2& h) {
                              const double rate = stream.uniform_open() < h.weight ? h.rate1 : h.rate2;
                              return -std::log(stream.uniform_open()) / rate;
                          },
                          [&stream](const UniformPositive& u) {
                              return u.lower + (u.upper - u.lower) * stream.uniform_open();
                          },
                      },
                      spec);
}

std::string case_name(ArrivalCase c)
{
    switch (c) {
    case ArrivalCase::renewal:
        return "renewal";
    case ArrivalCase::poisson:
        return "poisson";
    case ArrivalCase::deterministic:
        return "deterministic";
    }
    return "unknown";
}

ArrivalCase parse_arrival_case(const std::string& name)
{
    if (name == "renewal") {
        return ArrivalCase::renewal;
    }
    if (name == "poisson") {
        return ArrivalCase::poisson;
    }
    if (name == "deterministic") {
        return ArrivalCase::deterministic;
    }
    throw ConfigError(fmt::format("unknown arrival case '{}'", name));
}

DistributionSpec dispatcher_interarrival_spec(const ArrivalModel& model, double lambda, int k)
{
    if (!positive_finite(lambda) || k < 1) {
        throw ConfigError(fmt::format("need lambda > 0 and k >= 1, got lambda={} k={}", lambda, k));
    }
    const double rate = lambda * k;
    switch (model.arrival_case) {
    case ArrivalCase::poisson:
        return Exponential{rate};
    case ArrivalCase::deterministic:
        return Deterministic{1.0 / rate};
    case ArrivalCase::renewal:
        validate(model.base);
        return rescaled(model.base, 1.0 / (rate * mean(model.base)));
    }
    throw ConfigError("unknown arrival case");
}

}  // namespace perdisp
