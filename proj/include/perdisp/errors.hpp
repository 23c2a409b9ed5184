#pragma once

#include <stdexcept>
#include <string>

namespace perdisp {

// Failure classes and the CLI exit codes they map to (see tools/perdisp.cpp).

/// Invalid parameters, malformed configuration, policy/config mismatch.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A queue would be (or was observed to be) unstable, or a feasible set is empty.
class InstabilityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A point or set lies outside the stable region (e.g. optimizer probes).
class InfeasibleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Iterative numerics failed to converge.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operation is undefined for the given input (e.g. a queue that is never visited).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

}  // namespace perdisp
