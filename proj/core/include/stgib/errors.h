#ifndef STGIB_ERRORS_H_
#define STGIB_ERRORS_H_

#include <stdexcept>
#include <string>

namespace stgib {

// Array dimensions disagree with what an operation expects.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A value is outside its admissible domain (non-finite, out of range, ...).
class ValueError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Table lookup with an out-of-range index.
class IndexError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite loss or gradient during optimization.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unrecognized file magic or format version.
class VersionError : public IoError {
 public:
  using IoError::IoError;
};

}  // namespace stgib

#endif  // STGIB_ERRORS_H_
