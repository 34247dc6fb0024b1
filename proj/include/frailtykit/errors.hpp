#pragma once

#include <stdexcept>
#include <string>

namespace frailtykit {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad input or configuration. The CLI maps these to exit code 1.
struct ValidationError : Error {
    using Error::Error;
};

struct DomainError : ValidationError {
    using ValidationError::ValidationError;
};

struct ParseError : ValidationError {
    ParseError(const std::string& what, std::size_t row, std::string column)
        : ValidationError("row " + std::to_string(row) + ", column '" + column + "': " + what),
          row_(row),
          column_(std::move(column)) {}

    std::size_t row() const noexcept { return row_; }
    const std::string& column() const noexcept { return column_; }

private:
    std::size_t row_;
    std::string column_;
};

struct InsufficientDrawsError : ValidationError {
    using ValidationError::ValidationError;
};

struct IncomparableModelsError : ValidationError {
    using ValidationError::ValidationError;
};

// Sampler or study breakdown. The CLI maps these to exit code 2.
struct NumericalError : Error {
    using Error::Error;
};

struct InitializationError : NumericalError {
    using NumericalError::NumericalError;
};

}  // namespace frailtykit
