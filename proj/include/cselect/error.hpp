#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace cselect {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A body whose defining constraints admit no point.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// Iterative projection hit its cap without settling.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// A point of the domain matched no piece (or no stratum).
class CoverageError : public Error {
 public:
  CoverageError(const std::string& what, std::vector<double> witness)
      : Error(what), witness_(std::move(witness)) {}
  const std::vector<double>& witness() const noexcept { return witness_; }

 private:
  std::vector<double> witness_;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Division by zero or square root of a negative inside an expression.
class EvalError : public Error {
 public:
  using Error::Error;
};

}  // namespace cselect
