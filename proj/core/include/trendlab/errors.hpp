#pragma once

#include <stdexcept>
#include <string>

namespace trendlab {

// Base of all trendlab exceptions.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad user-supplied configuration: flags, parameter files, split specs.
// Mapped to exit code 2 by the CLI.
struct ConfigError : Error {
    using Error::Error;
};

// Bad or inconsistent market data. Mapped to exit code 3 by the CLI.
struct DataError : Error {
    using Error::Error;
};

struct ParseError : DataError {
    using DataError::DataError;
};

struct ValidationError : DataError {
    using DataError::DataError;
};

struct EmptySeriesError : DataError {
    using DataError::DataError;
};

struct EmptySegmentError : DataError {
    using DataError::DataError;
};

struct NonFiniteInputError : DataError {
    using DataError::DataError;
};

struct NonPositiveEquityError : DataError {
    using DataError::DataError;
};

struct SchemaMismatchError : ConfigError {
    using ConfigError::ConfigError;
};

struct InvalidPeriodError : ConfigError {
    using ConfigError::ConfigError;
};

struct InvalidDimensionError : ConfigError {
    using ConfigError::ConfigError;
};

// Eigendecomposition of the search covariance did not converge; the
// optimizer reacts by re-conditioning the matrix.
struct DecompositionFailure : Error {
    using Error::Error;
};

}  // namespace trendlab
