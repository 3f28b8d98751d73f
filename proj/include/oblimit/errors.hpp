#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace oblimit {

/// Base class of every error raised by the library. `kind()` is a stable,
/// machine-readable tag used by the CLI error channel.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

/// A thermodynamic point left the admissible domain of a potential.
class DomainError : public Error {
public:
    explicit DomainError(const std::string& what) : Error("domain", what) {}
};

/// Parameters outside the regime where a mapping or group is defined.
class ParameterError : public Error {
public:
    explicit ParameterError(const std::string& what) : Error("parameter", what) {}
};

/// An iterative linear solve did not reach its tolerance.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, std::size_t iterations, double residual)
        : Error("convergence", what), iterations_(iterations), residual_(residual) {}
    std::size_t iterations() const noexcept { return iterations_; }
    double residual() const noexcept { return residual_; }

private:
    std::size_t iterations_;
    double residual_;
};

/// Time step too large for the explicit parts of a scheme.
class StabilityError : public Error {
public:
    explicit StabilityError(const std::string& what) : Error("stability", what) {}
};

/// A time integration failed; carries the index of the failing step.
class StepFailure : public Error {
public:
    StepFailure(std::size_t step, const Error& cause)
        : Error(cause.kind(), "step " + std::to_string(step) + ": " + cause.what()), step_(step) {}
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

/// Invalid configuration text. `line` is 1-based, 0 when not tied to a line.
class ConfigError : public Error {
public:
    ConfigError(const std::string& what, std::size_t line = 0, std::string key = {})
        : Error("config", what), line_(line), key_(std::move(key)) {}
    std::size_t line() const noexcept { return line_; }
    const std::string& key() const noexcept { return key_; }

private:
    std::size_t line_;
    std::string key_;
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error("io", what) {}
};

}  // namespace oblimit
