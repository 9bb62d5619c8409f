#pragma once

#include <stdexcept>
#include <string>

namespace icr {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Array dimensions disagree with each other or with a declared shape.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A value violates a documented precondition or type invariant.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Filesystem or container decoding failure.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace icr
