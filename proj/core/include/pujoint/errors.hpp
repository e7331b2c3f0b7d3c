#pragma once

#include <stdexcept>
#include <string>

namespace pujoint {

// Dimension or alignment mismatch between operands.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Out-of-range or degenerate argument (empty inputs, bad priors, ...).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed file contents (IDX, CSV, checkpoint).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite values reached the optimizer; the trial must be aborted.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An operation was called in a state that cannot satisfy it.
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace pujoint
