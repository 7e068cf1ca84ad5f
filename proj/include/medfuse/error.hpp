#pragma once

#include <stdexcept>
#include <string>

namespace medfuse {

// Base for all medfuse errors. CLI maps subclasses to exit codes:
// ConfigError -> 1 (usage), DataError family -> 2, numeric/internal -> 3.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed configuration or parameters (bad flag values, invalid specs).
struct ConfigError : Error {
    using Error::Error;
};

// Bad input data: malformed files, empty cohorts, missing required fields.
struct DataError : Error {
    using Error::Error;
};

// Out-of-range index (e.g. class target outside [0, C)).
struct IndexError : DataError {
    using DataError::DataError;
};

// Metric undefined on the given inputs (single-class AUROC, no positives).
struct MetricError : DataError {
    using DataError::DataError;
};

// Tensor shape mismatch.
struct ShapeError : Error {
    using Error::Error;
};

// Non-finite values where finite ones are required.
struct NumericError : Error {
    using Error::Error;
};

// Broken internal contract (e.g. backward() on a non-scalar node).
struct ContractError : Error {
    using Error::Error;
};

}  // namespace medfuse
