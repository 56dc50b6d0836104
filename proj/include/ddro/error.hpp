#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ddro {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Violated precondition or malformed input (shapes, ranges, stochasticity).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// p̃_θ(y⁻|x) ≤ 0 where a log of it is required.
class TildeNegativity : public Error {
 public:
  explicit TildeNegativity(double raw_value)
      : Error("tilde-negativity: p_tilde = " + std::to_string(raw_value)), raw_value_(raw_value) {}
  double raw_value() const { return raw_value_; }

 private:
  double raw_value_;
};

// Non-finite loss or gradient during an optimization run.
class Divergence : public Error {
 public:
  Divergence(const std::string& what, std::size_t step)
      : Error(what + " at step " + std::to_string(step)), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

}  // namespace ddro
