#pragma once

#include <stdexcept>
#include <string>

namespace openq {

// Shape or subsystem-dimension mismatch between operands.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Input violates a documented precondition (e.g. non-Hermitian input to a
// Hermitian eigensolver).
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Index or parameter outside its admissible range.
class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Operation is deliberately not supported for this kind of object.
class UnsupportedError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class SingularityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Integrator-level failures.
class StepLimitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class StiffnessError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace openq
