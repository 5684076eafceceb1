// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace emgpop {

/// Invalid parameters, mismatched shapes or rates, unusable paths.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input data that violates an invariant (degenerate channels, bad files).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DegenerateInputError : public DataError {
public:
    using DataError::DataError;
};

class FormatVersionError : public DataError {
public:
    using DataError::DataError;
};

class DimensionError : public DataError {
public:
    using DataError::DataError;
};

class TruncationError : public DataError {
public:
    using DataError::DataError;
};

class SingularSystemError : public DataError {
public:
    using DataError::DataError;
};

/// A sweep result lacks rows needed for selection or export.
class IncompleteSweepError : public DataError {
public:
    using DataError::DataError;
};

} // namespace emgpop
