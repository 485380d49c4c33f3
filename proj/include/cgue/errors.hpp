#pragma once

#include <stdexcept>
#include <string>

namespace cgue {

/// Bad input: dimension mismatches, incomplete bases, out-of-range counts.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical routine failed to converge or produced an unusable result.
class NumericFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A request exceeds a hard size guard (dense envelope, quadrature dimension).
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Iteration or integral diverged; carries a human-readable trace.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, std::string trace)
      : std::runtime_error(what), trace_(std::move(trace)) {}
  const std::string& trace() const noexcept { return trace_; }

 private:
  std::string trace_;
};

/// Degeneracy patterns disagree between sampled directions.
class AmbiguityError : public std::runtime_error {
 public:
  AmbiguityError(const std::string& what, std::string first, std::string second)
      : std::runtime_error(what), first_(std::move(first)), second_(std::move(second)) {}
  const std::string& first_pattern() const noexcept { return first_; }
  const std::string& second_pattern() const noexcept { return second_; }

 private:
  std::string first_;
  std::string second_;
};

}  // namespace cgue
