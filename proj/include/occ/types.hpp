#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace occ {

// Dense storage aliases. Rows index states throughout, so row-major keeps
// per-state probability rows contiguous.
template <class Scalar>
using matrix_t = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class Scalar>
using vector_t = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Real = double;
using Index = Eigen::Index;
using Matrix = matrix_t<Real>;
using Vector = vector_t<Real>;
using CountMatrix = matrix_t<std::int64_t>;
using CountVector = vector_t<std::int64_t>;

/// Either a state index in [0, num_states) or the absorbing final state.
class StateOrTerminal {
 public:
  static StateOrTerminal state(Index s) { return StateOrTerminal(s); }
  static StateOrTerminal terminal() { return StateOrTerminal(-1); }

  bool is_terminal() const { return s_ < 0; }
  Index index() const {
    if (is_terminal()) throw std::logic_error("index() called on terminal state");
    return s_;
  }

  friend bool operator==(StateOrTerminal a, StateOrTerminal b) = default;

 private:
  explicit StateOrTerminal(Index s) : s_(s) {}
  Index s_;
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data violates a documented invariant (bad file, bad table, bad MDP).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// The call itself is malformed (bad parameter, mixture queried without an
/// episode scope, zero horizon cap).
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Refusal to compute an occupancy that is not finite (gamma = 1 with a
/// policy whose surviving-state transition matrix has spectral radius >= 1).
class NonFiniteOccupancyError : public Error {
 public:
  using Error::Error;
};

/// Enumeration could not drive its tail bound below the requested tolerance
/// within the depth budget. Carries the bound that was achieved.
class HorizonInsufficientError : public Error {
 public:
  HorizonInsufficientError(const std::string& what, Real achieved)
      : Error(what), achieved_tail_bound(achieved) {}
  Real achieved_tail_bound;
};

/// A linear solve produced an unacceptable residual or a clearly corrupt
/// solution.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, Real residual)
      : Error(what), residual(residual) {}
  Real residual;
};

}  // namespace occ
