#pragma once

#include <stdexcept>
#include <string>

#include "mdpdist/types.hpp"

namespace mdpdist {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Document could not be read into a model.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Model violates a structural or numeric invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class NonStochasticRowError : public ValidationError {
 public:
  NonStochasticRowError(std::string where, Scalar row_deficit)
      : ValidationError(where + ": row sum off by " + std::to_string(row_deficit)),
        location(std::move(where)),
        deficit(row_deficit) {}
  std::string location;
  Scalar deficit;  // row sum minus one
};

class NegativeEntryError : public ValidationError {
 public:
  explicit NegativeEntryError(std::string where)
      : ValidationError(where + ": negative entry"), location(std::move(where)) {}
  std::string location;
};

class GammaOutOfRangeError : public ValidationError {
 public:
  explicit GammaOutOfRangeError(Scalar value)
      : ValidationError("gamma must lie in [0, 1), got " + std::to_string(value)),
        gamma(value) {}
  Scalar gamma;
};

class EmptyStateOrActionSetError : public ValidationError {
 public:
  EmptyStateOrActionSetError() : ValidationError("state and action sets must be nonempty") {}
};

// A linear solve produced an unusable result; indicates a bug or broken input.
class SolveFailedError : public Error {
 public:
  using Error::Error;
};

class NoConvergenceError : public Error {
 public:
  NoConvergenceError(const std::string& what, long iters)
      : Error(what + " after " + std::to_string(iters) + " iterations"), iterations(iters) {}
  long iterations;
};

class DenominatorNotPositiveError : public Error {
 public:
  DenominatorNotPositiveError(Index target_row, Scalar denom)
      : Error("ratio formula denominator not positive for target " +
              std::to_string(target_row) + " (value " + std::to_string(denom) + ")"),
        row(target_row),
        value(denom) {}
  Index row;
  Scalar value;
};

class InfeasibleCouplingError : public Error {
 public:
  explicit InfeasibleCouplingError(Scalar gap)
      : Error("coupling violates its marginals by " + std::to_string(gap)),
        max_marginal_gap(gap) {}
  InfeasibleCouplingError(Scalar mass_a, Scalar mass_b)
      : Error("no coupling exists: total masses " + std::to_string(mass_a) + " vs " +
              std::to_string(mass_b)),
        max_marginal_gap(mass_a > mass_b ? mass_a - mass_b : mass_b - mass_a) {}
  Scalar max_marginal_gap;
};

class TooLargeError : public Error {
 public:
  using Error::Error;
};

class SizeMismatchError : public Error {
 public:
  SizeMismatchError(Index nx, Index ny)
      : Error("support sizes differ: " + std::to_string(nx) + " vs " + std::to_string(ny)),
        size_x(nx),
        size_y(ny) {}
  Index size_x;
  Index size_y;
};

class AllCensoredError : public Error {
 public:
  using Error::Error;
};

class EmptySupportError : public Error {
 public:
  using Error::Error;
};

}  // namespace mdpdist
