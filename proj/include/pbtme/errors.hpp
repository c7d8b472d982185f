#pragma once

#include <stdexcept>
#include <string>

namespace pbtme {

/// A caller broke an operation's precondition (shape mismatch, bad index, ...).
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Invalid or inconsistent run configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed persisted data (snapshots, centroid tables, configs).
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace pbtme
