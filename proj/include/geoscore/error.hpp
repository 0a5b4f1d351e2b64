#pragma once

#include <stdexcept>
#include <string>

namespace geoscore {

// Base of every error raised by the library. The CLI maps subclasses onto
// exit codes (see commands.hpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed container or manifest structure.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Container payload shorter or longer than its header declares.
class LengthError : public Error {
 public:
  using Error::Error;
};

// Content violates a documented invariant (non-finite values, duplicate ids,
// shape mismatch, missing files).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Caller supplied an out-of-domain parameter.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// The quantity is mathematically undefined for the given input.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

}  // namespace geoscore
