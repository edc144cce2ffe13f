#pragma once

#include <stdexcept>
#include <string>

namespace hawkes {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Malformed input data (e.g. non-increasing timestamps).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A computation produced a non-finite value.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Too few events for a reliable calibration.
class InsufficientDataError : public Error {
public:
    using Error::Error;
};

class NonConvergenceError : public Error {
public:
    using Error::Error;
};

/// Raised while reading quote files; carries the offending line.
class IngestError : public Error {
public:
    IngestError(const std::string& what, std::size_t line)
        : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

} // namespace hawkes
