#pragma once

#include <stdexcept>
#include <string>

namespace bpdg {

/// Invalid run configuration or mesh parameters (CLI exit code 1).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of a function.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// The admissible time step collapsed to zero (CLI exit code 2).
class StallError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A cell average went negative, i.e. the positivity guarantee was broken
/// (CLI exit code 3).
class PositivityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Broken internal invariant (e.g. a shifted momentum beyond the grid).
class InternalError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitStall = 2, kExitPositivity = 3 };

} // namespace bpdg
