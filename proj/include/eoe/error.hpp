#pragma once

#include <stdexcept>
#include <string>

namespace eoe {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller-supplied parameter violates an operation's precondition.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Malformed input data: unparsable files, schema violations, invalid annotations.
class DataError : public Error {
 public:
  using Error::Error;
};

/// A classifier could not be trained on the given records.
class TrainingError : public Error {
 public:
  using Error::Error;
};

/// Numeric failure (non-finite values, singular systems that regularization could not fix).
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace eoe
