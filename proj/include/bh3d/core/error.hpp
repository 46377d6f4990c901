#pragma once

#include <stdexcept>
#include <string>

namespace bh3d {

enum class ErrorKind {
    Domain,
    Contract,
    Range,
    Config,
    Validation,
    Numerical,
    Io,
    FitRejected,
};

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class DomainError : public Error {
public:
    explicit DomainError(const std::string& what) : Error(ErrorKind::Domain, what) {}
};

class ContractError : public Error {
public:
    explicit ContractError(const std::string& what) : Error(ErrorKind::Contract, what) {}
};

class RangeError : public Error {
public:
    explicit RangeError(const std::string& what) : Error(ErrorKind::Range, what) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what) : Error(ErrorKind::Validation, what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

/// Optimizer failure; carries the iteration and residual at the point of failure.
class NumericalError : public Error {
public:
    NumericalError(const std::string& what, long iteration, double residual)
        : Error(ErrorKind::Numerical, what), iteration_(iteration), residual_(residual) {}
    long iteration() const noexcept { return iteration_; }
    double residual() const noexcept { return residual_; }

private:
    long iteration_;
    double residual_;
};

class FitRejectedError : public Error {
public:
    FitRejectedError(const std::string& what, double residual)
        : Error(ErrorKind::FitRejected, what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

#define BH3D_REQUIRE(cond, ExceptionType, msg) \
    do {                                       \
        if (!(cond)) throw ExceptionType(msg); \
    } while (false)

}  // namespace bh3d
