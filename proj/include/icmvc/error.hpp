#pragma once

#include <stdexcept>
#include <string>

namespace icmvc {

// Root of every exception thrown by the library. The CLI maps the
// subclasses onto its exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Operand shapes do not fit the operation.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Invalid hyperparameter or option value.
class ConfigError : public Error {
public:
    using Error::Error;
};

// A documented precondition on argument values was violated.
class ContractError : public Error {
public:
    using Error::Error;
};

// Input data is inconsistent (row counts, masks, labels).
class DataError : public Error {
public:
    using Error::Error;
};

// A file could not be parsed. Carries the location of the offending cell.
class ParseError : public DataError {
public:
    ParseError(std::string file, std::size_t line, std::size_t column, const std::string& what)
        : DataError(file + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + what),
          file_(std::move(file)),
          line_(line),
          column_(column) {}

    const std::string& file() const { return file_; }
    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }

private:
    std::string file_;
    std::size_t line_;
    std::size_t column_;
};

// Input is well-formed but too small or degenerate to process.
class DegenerateInputError : public DataError {
public:
    using DataError::DataError;
};

// A graph row ended up without neighbors after symmetrization.
class DegenerateGraphError : public DegenerateInputError {
public:
    using DegenerateInputError::DegenerateInputError;
};

// Log of a non-positive value with the epsilon clamp disabled.
class DomainError : public Error {
public:
    using Error::Error;
};

// Synthetic data generation could not satisfy its constraints.
class GenerationError : public Error {
public:
    using Error::Error;
};

}  // namespace icmvc
