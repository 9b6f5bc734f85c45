#pragma once

#include <stdexcept>
#include <string>

namespace qtf {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Non-finite or otherwise unusable numeric input.
struct InputError : Error {
    using Error::Error;
};

/// A configuration value outside its legal range.
struct ParameterError : Error {
    using Error::Error;
};

struct DimensionError : Error {
    using Error::Error;
};

/// A matrix too ill-conditioned to factorize, with a condition report.
struct SingularityError : Error {
    using Error::Error;
};

/// State preparation failed (zero vector, register cap exceeded).
struct EncodingError : Error {
    using Error::Error;
};

/// Malformed or missing data file.
struct DataError : Error {
    using Error::Error;
};

/// A training subset that cannot support the requested fit.
struct DegenerateDataError : Error {
    using Error::Error;
};

/// An internal cross-check (two routes to the same quantity) disagreed.
struct VerificationError : Error {
    using Error::Error;
};

} // namespace qtf
