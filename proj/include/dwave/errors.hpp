#ifndef DWAVE_ERRORS_HPP
#define DWAVE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace dwave {

/// Failure categories. The CLI maps each one to its own exit status.
enum class ErrorKind {
    InvalidInput,
    Config,
    Hypothesis,
    Numerical,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Precondition failure of a library call (bad sizes, out-of-range parameters).
class InvalidInput : public Error {
public:
    explicit InvalidInput(const std::string& what) : Error(ErrorKind::InvalidInput, what) {}
};

/// Run configuration that does not match the documented schema.
class ConfigError : public Error {
public:
    ConfigError(const std::string& field, const std::string& what)
        : Error(ErrorKind::Config, field + ": " + what), field_(field) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// A standing structural hypothesis of the equation does not hold for the input.
class HypothesisViolation : public Error {
public:
    HypothesisViolation(const std::string& hypothesis, const std::string& what)
        : Error(ErrorKind::Hypothesis, hypothesis + " violated: " + what), hypothesis_(hypothesis) {}
    const std::string& hypothesis() const noexcept { return hypothesis_; }

private:
    std::string hypothesis_;
};

class NumericalFailure : public Error {
public:
    explicit NumericalFailure(const std::string& what) : Error(ErrorKind::Numerical, what) {}
};

/// Process exit status for each failure category.
inline int exitCode(ErrorKind kind) noexcept
{
    switch (kind) {
    case ErrorKind::Config:
    case ErrorKind::InvalidInput:
        return 2;
    case ErrorKind::Hypothesis:
        return 3;
    case ErrorKind::Numerical:
        return 4;
    }
    return 4;
}

} // namespace dwave

#endif
