#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace metroq {

// Every numerical threshold used by validators and solvers lives here so
// that callers can audit and override them in one place.
struct Tolerances {
  double norm = 1e-12;          // |<psi|psi> - 1|
  double hermitian = 1e-12;     // max |A - A^dagger|
  double trace = 1e-12;         // |Tr rho - 1|
  double psd = 1e-10;           // eigenvalues in [-psd, 0) are clamped to 0
  double completeness = 1e-10;  // |sum_x M_x - 1|, |sum_l k^dagger k - 1|
  double orthogonality = 1e-10; // projector products, ortho pairs
  double stochastic = 1e-12;    // column sums of detection channels
  double unitary = 1e-10;
  double zero_prob = 1e-14;     // probabilities treated as exactly zero
  double support = 1e-12;       // SLD eigenvalue cut-off
  double tail_mass = 1e-10;     // truncated Poisson tail
  double score_sum = 1e-8;      // sum of probability derivatives
  double singular_cond = 1e12;  // moment matrix condition number
  std::size_t max_dim = 4096;        // d^n in tensor products
  std::size_t max_outcomes = 65536;  // |X|^n in tensor products
};

inline constexpr Tolerances tol{};

class dimension_mismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised by validating constructors when an object violates its invariants.
class invalid_object : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A probability derivative is nonzero where the probability vanishes.
class support_mismatch : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class capacity_exceeded : public std::length_error {
 public:
  using std::length_error::length_error;
};

inline void require_dims(bool ok, const std::string& what) {
  if (!ok) throw dimension_mismatch(what);
}

}  // namespace metroq
