#pragma once

#include <stdexcept>
#include <string>

namespace tfqkd {

/// Input file could not be read or decoded.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

/// A domain invariant was violated (bad parameters, inconsistent counts).
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// A statistical bound degenerated to nothing useful (e.g. negative yield
/// numerator after adverse adjustment).
class VacuousBoundError : public std::runtime_error {
public:
    explicit VacuousBoundError(const std::string& what) : std::runtime_error(what) {}
};

/// Not enough observed events to evaluate an estimator.
class InsufficientDataError : public std::runtime_error {
public:
    explicit InsufficientDataError(const std::string& what) : std::runtime_error(what) {}
};

/// Argument outside the mathematical domain of a function.
class DomainError : public std::runtime_error {
public:
    explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace tfqkd
