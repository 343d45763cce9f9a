#pragma once

#include <stdexcept>
#include <string>

namespace cate {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid arguments, broken invariants, malformed inputs.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Degenerate numeric input (zero-norm vector, contradictory prompt set).
class DegenerateInputError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// Non-finite values produced inside a computation.
class NumericError : public Error {
public:
    using Error::Error;
};

// Lookup of an unknown label, bag id, or concept name.
class LookupError : public Error {
public:
    using Error::Error;
};

// Malformed text input (barcodes, config files).
class ParseError : public Error {
public:
    using Error::Error;
};

// Metric requested on data where it is not defined (single-class AUC).
class UndefinedMetricError : public Error {
public:
    using Error::Error;
};

// Filesystem and serialization failures.
class IoError : public Error {
public:
    using Error::Error;
};

// Config file problems (unknown key, bad value, missing key). CLI exit 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Requested artifact does not exist (bag id, file path). CLI exit 3.
class MissingArtifactError : public Error {
public:
    using Error::Error;
};

// Operation incompatible with the checkpoint's mode. CLI exit 4.
class ModeMismatchError : public Error {
public:
    using Error::Error;
};

// Training aborted (non-finite loss) with step diagnostics in the message.
class TrainAbortError : public Error {
public:
    using Error::Error;
};

}  // namespace cate
