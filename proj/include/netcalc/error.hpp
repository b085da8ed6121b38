#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace netcalc {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A value or argument violates an operation's precondition.
class DomainError : public Error {
public:
    using Error::Error;
};

/// A configuration or expression could not be parsed.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line, std::size_t column)
        : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
          line_(line),
          column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

/// A syntactically valid experiment file carries a bad value in a named field.
class SpecError : public Error {
public:
    SpecError(std::string field, const std::string& what)
        : Error("field '" + field + "': " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// A truncation dimension is too small for the requested tail tolerance.
class TruncationError : public DomainError {
public:
    TruncationError(std::size_t given, std::size_t required)
        : DomainError("truncation N=" + std::to_string(given) + " is too small for the requested tail tolerance; required N=" +
                      std::to_string(required)),
          required_(required) {}

    std::size_t required() const noexcept { return required_; }

private:
    std::size_t required_;
};

/// Raised when |a_{alpha,k}| <= g_k fails at a sampled pair.
class DominationError : public Error {
public:
    DominationError(double alpha, std::size_t k, double magnitude, double bound)
        : Error("domination violated at alpha=" + std::to_string(alpha) + ", k=" + std::to_string(k) +
                ": |a|=" + std::to_string(magnitude) + " > g=" + std::to_string(bound)),
          alpha_(alpha),
          k_(k) {}

    double alpha() const noexcept { return alpha_; }
    std::size_t k() const noexcept { return k_; }

private:
    double alpha_;
    std::size_t k_;
};

}  // namespace netcalc
