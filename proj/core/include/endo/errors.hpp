#pragma once

#include <stdexcept>
#include <string>

namespace endo {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Bad user input: malformed files, schema violations, inconsistent shapes.
struct InputError : Error {
    using Error::Error;
};

/// Numerical failure: blow-up, singular solve, out-of-domain query.
struct NumericError : Error {
    using Error::Error;
};

}  // namespace endo
