#ifndef SIPFRAME_CONFIG_HPP_
#define SIPFRAME_CONFIG_HPP_

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace sipframe {

constexpr const char *kVersion = "0.3.1";

using cplx = std::complex<double>;
using cvec = Eigen::VectorXcd;
using cmat = Eigen::MatrixXcd;
using rvec = Eigen::VectorXd;
using Index = Eigen::Index;

// Thrown when the coordinates of an element do not match the space it is
// used with.
class DimensionMismatch : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// Thrown when an input violates a documented precondition (invalid
// exponent, empty family, infeasible representation, ...).
class PreconditionError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// Thrown when an iterative method fails to reach its accuracy target.
class NumericalFailure : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Every numerical threshold used by the library lives here, so that the CLI
// can override them from a problem file and tests can pin them.
struct Tolerances {
  // sip_core
  double conjugate_exponent = 1e-12;
  // certifier
  double refute_ratio = 1e-8;
  double ratio_change = 1e-10;
  double zero_nudge = 1e-12;
  double grid_error = 2e-2;
  // linear algebra: singular values below rank_rel * sigma_max count as zero
  double rank_rel = 1e-10;
  // atomic_recon
  double span_membership = 1e-8;
  double first_order = 1e-6;
  double irls_eps_start = 1e-1;
  double irls_eps_floor = 1e-12;
  int irls_max_iterations = 500;
  double reconstruction = 1e-7;
  double local_reproduction = 1e-8;
  // perturb
  double premise_slack = 1e-6;
  double bessel_slack = 1e-3;
  double lower_bound_slack = 1e-2;
  double sandwich_slack = 1e-6;
  double transformed_slack = 1e-3;
};

inline void require(bool condition, const std::string &message) {
  if (!condition) {
    throw PreconditionError(message);
  }
}

inline void require_dim(Index actual, Index expected, const char *what) {
  if (actual != expected) {
    throw DimensionMismatch(std::string(what) + ": expected dimension " +
                            std::to_string(expected) + ", got " +
                            std::to_string(actual));
  }
}

// SplitMix64 finalizer; derives independent restart seeds from one run seed.
inline std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

} // namespace sipframe

#endif // SIPFRAME_CONFIG_HPP_
