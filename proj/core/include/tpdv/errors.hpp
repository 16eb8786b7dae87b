#pragma once

#include <stdexcept>
#include <string>

namespace tpdv {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operands do not share compatible dimensions.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A required optional capability (eval, inv_apply, materialize, ...) is absent.
class UnsupportedError : public Error {
public:
    using Error::Error;
};

/// A contract precondition rules out the requested operation
/// (e.g. a contraction bound queried where it provably does not apply).
class NotApplicableError : public Error {
public:
    using Error::Error;
};

/// Invalid user-supplied argument or configuration value.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Failure inside an iterative or direct solve; message carries context
/// such as the iteration index.
class SolveError : public Error {
public:
    using Error::Error;
};

/// File input/output failure.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace tpdv
