#ifndef SIPFRAME_LINALG_HPP_
#define SIPFRAME_LINALG_HPP_

#include <Eigen/SVD>

#include "sipframe/config.hpp"

// Small dense Euclidean helpers built on the SVD.  Everything here uses the
// standard Hermitian geometry of C^n; the l^p geometry lives elsewhere.

namespace sipframe {
namespace linalg {

struct Svd {
  cmat U;
  rvec sigma;
  cmat V;
  Index rank = 0;
};

inline Svd svd(const cmat &A, double rank_rel = Tolerances{}.rank_rel) {
  Svd out;
  if (A.rows() == 0 || A.cols() == 0) {
    out.U = cmat::Identity(A.rows(), A.rows());
    out.V = cmat::Identity(A.cols(), A.cols());
    out.sigma = rvec::Zero(0);
    return out;
  }
  Eigen::JacobiSVD<cmat> solver(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
  out.U = solver.matrixU();
  out.V = solver.matrixV();
  out.sigma = solver.singularValues();
  const double top = out.sigma.size() > 0 ? out.sigma[0] : 0.0;
  for (Index i = 0; i < out.sigma.size(); ++i) {
    if (top > 0.0 && out.sigma[i] > rank_rel * top) {
      ++out.rank;
    }
  }
  return out;
}

inline Index rank(const cmat &A, double rank_rel = Tolerances{}.rank_rel) {
  return svd(A, rank_rel).rank;
}

// Moore-Penrose pseudo-inverse.
inline cmat pinv(const cmat &A, double rank_rel = Tolerances{}.rank_rel) {
  const Svd s = svd(A, rank_rel);
  cmat out = cmat::Zero(A.cols(), A.rows());
  for (Index i = 0; i < s.rank; ++i) {
    out += s.V.col(i) * (1.0 / s.sigma[i]) * s.U.col(i).adjoint();
  }
  return out;
}

// Orthonormal basis of {x : A x = 0}, as columns.
inline cmat null_space(const cmat &A, double rank_rel = Tolerances{}.rank_rel) {
  const Svd s = svd(A, rank_rel);
  return s.V.rightCols(A.cols() - s.rank);
}

// Orthonormal basis of the column space of A.
inline cmat range_basis(const cmat &A, double rank_rel = Tolerances{}.rank_rel) {
  const Svd s = svd(A, rank_rel);
  return s.U.leftCols(s.rank);
}

// Orthogonal projector onto the column space of A.
inline cmat range_projector(const cmat &A,
                            double rank_rel = Tolerances{}.rank_rel) {
  const cmat B = range_basis(A, rank_rel);
  return B * B.adjoint();
}

// Least-norm least-squares solution of A x = b.
inline cvec least_norm(const cmat &A, const cvec &b,
                       double rank_rel = Tolerances{}.rank_rel) {
  return pinv(A, rank_rel) * b;
}

inline double spectral_norm(const cmat &A) {
  if (A.size() == 0) {
    return 0.0;
  }
  Eigen::JacobiSVD<cmat> solver(A);
  return solver.singularValues()[0];
}

} // namespace linalg
} // namespace sipframe

#endif // SIPFRAME_LINALG_HPP_
