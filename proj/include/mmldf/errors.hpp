#pragma once

#include <stdexcept>
#include <string>

namespace mmldf {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed input text (LIBSVM, CSV, model JSON). Carries a 1-based line
/// number when one is known.
class ParseError : public Error {
public:
    explicit ParseError(const std::string& what, long line = -1)
        : Error(line >= 0 ? what + " at line " + std::to_string(line) : what),
          line_(line) {}

    long line() const noexcept { return line_; }

private:
    long line_;
};

/// Invalid configuration or shape mismatch (CLI exit code 2).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Numerical failure: factorization breakdown, non-finite values,
/// non-invertible covariance (CLI exit code 3).
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace mmldf
