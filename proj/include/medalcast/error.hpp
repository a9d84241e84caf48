#pragma once

#include <stdexcept>
#include <string>

namespace medalcast {

/// Error categories. The CLI maps these onto distinct exit codes:
/// usage/IO/schema problems exit 2, missing artifacts exit 3, numeric
/// failures exit 4.
enum class ErrorKind {
    Io,               // unreadable/unwritable file
    Schema,           // malformed header, missing column, duplicate key
    Validation,       // cross-file consistency violation
    Range,            // value outside a declared domain
    Shape,            // dimension mismatch
    InsufficientData, // series/sample too short for the operation
    Numeric,          // non-convergence, divergence, degenerate statistic
    State,            // missing checkpoint or unfitted model
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline Error io_error(const std::string& m) { return {ErrorKind::Io, m}; }
inline Error schema_error(const std::string& m) { return {ErrorKind::Schema, m}; }
inline Error validation_error(const std::string& m) { return {ErrorKind::Validation, m}; }
inline Error range_error(const std::string& m) { return {ErrorKind::Range, m}; }
inline Error shape_error(const std::string& m) { return {ErrorKind::Shape, m}; }
inline Error insufficient_data(const std::string& m) { return {ErrorKind::InsufficientData, m}; }
inline Error numeric_error(const std::string& m) { return {ErrorKind::Numeric, m}; }
inline Error state_error(const std::string& m) { return {ErrorKind::State, m}; }

} // namespace medalcast
