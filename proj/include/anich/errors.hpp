#pragma once

#include <stdexcept>
#include <string>

namespace anich {

// Base of every error raised by the library. Each subclass maps onto one
// failure class of the public contract.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument outside the domain of a function (e.g. |s| > 1 for the logarithmic potential).
class DomainError : public Error {
public:
    using Error::Error;
};

// Regularization index below the admissible minimum.
class LadderError : public Error {
public:
    using Error::Error;
};

class OverflowError : public Error {
public:
    using Error::Error;
};

// Numerically estimated constants not strictly positive.
class DegenerateError : public Error {
public:
    using Error::Error;
};

// Right-hand side violates the pure-Neumann solvability condition.
class CompatibilityError : public Error {
public:
    using Error::Error;
};

class ConvergenceError : public Error {
public:
    using Error::Error;
};

class StepFailure : public Error {
public:
    using Error::Error;
};

class BoundViolation : public Error {
public:
    using Error::Error;
};

class PreconditionError : public Error {
public:
    using Error::Error;
};

class StagnationError : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    ValidationError(std::string field, const std::string& what)
        : Error("validation error: " + field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class ParseError : public Error {
public:
    ParseError(int line, const std::string& what)
        : Error("parse error (line " + std::to_string(line) + "): " + what), line_(line) {}

    int line() const noexcept { return line_; }

private:
    int line_;
};

} // namespace anich
