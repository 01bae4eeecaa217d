#pragma once

#include <stdexcept>
#include <string>

namespace natsr {

// Base for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Extent or rank mismatch. The message names the offending dimension.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A precondition on a scalar argument (alpha outside [0,1], sigma <= 0, ...).
class ValueError : public Error {
 public:
  using Error::Error;
};

// Loss or gradient became non-finite during optimisation.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

// Unreadable, truncated, or tampered files.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace natsr
