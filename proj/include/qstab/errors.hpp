#pragma once

#include <stdexcept>
#include <string>

namespace qstab {

/// Precondition or invariant of an operation was not met by its inputs.
class ContractViolation : public std::invalid_argument {
public:
    explicit ContractViolation(const std::string& what) : std::invalid_argument(what) {}
};

/// A linear or fixed-point solve could not produce an answer.
class SolverFailure : public std::runtime_error {
public:
    explicit SolverFailure(const std::string& what) : std::runtime_error(what) {}
};

/// Reading or writing a file failed. The message carries the path.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// Ball integral of u^2 is numerically zero, so a ratio over it is meaningless.
class DegenerateBall : public std::runtime_error {
public:
    explicit DegenerateBall(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool condition, const std::string& message) {
    if (!condition) throw ContractViolation(message);
}

} // namespace qstab
