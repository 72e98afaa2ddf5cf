#pragma once

#include <stdexcept>
#include <string>

namespace fec {

// Bad indices, mismatched dimensions, malformed structure.
class StructuralError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// Inputs that are structurally fine but violate a numerical contract
// (normalization, Hermiticity, probability ranges, ...).
class ValidationError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// A computation that could not reach its tolerance.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace fec
