#ifndef SIPFRAME_CERTIFIER_HPP_
#define SIPFRAME_CERTIFIER_HPP_

#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sipframe/frame_ops.hpp"

// Numerical certification of the X_d*-K-frame inequalities
//
//   A ||K* f*||  <=  ||T f*||_{X_d*}  <=  B ||f*||
//
// The optimal A and B are extrema of degree-0 homogeneous ratios over X*.
// Both are found by multi-start optimization on the unit sphere; the lower
// bound is additionally probed along null(T), where a direction with
// K* f* != 0 refutes the K-frame property outright.

namespace sipframe {

enum class Verdict { KFrame, BesselOnly, NoBesselBound, Refuted };

inline std::string to_string(Verdict v) {
  switch (v) {
  case Verdict::KFrame:
    return "K-frame";
  case Verdict::BesselOnly:
    return "Bessel-only";
  case Verdict::NoBesselBound:
    return "not-Bessel-bound-found";
  case Verdict::Refuted:
    return "refuted";
  }
  return "unknown";
}

struct CertifyOptions {
  OptimizerOptions optimizer;
  Tolerances tol;
  // 0 disables the grid oracle
  int oracle_resolution = 0;
};

struct CertificationReport {
  double A_est = 0.0;
  double B_est = 0.0;
  DualVector witness_lower;
  DualVector witness_upper;
  std::optional<double> oracle_A;
  std::optional<double> oracle_B;
  Verdict verdict = Verdict::KFrame;
  int restarts_used = 0;
  bool converged = false;
  // sup ||K g|| / ||g||, used for the sanity relation A ||K|| <= B
  double K_norm_est = 0.0;
  bool sanity_ok = true;
  std::vector<std::string> notes;
};

// ||T f*|| / ||K* f*||
inline HomogeneousRatio lower_frame_ratio(const FrameFamily &fam, const LinearOperator &K) {
  HomogeneousRatio r;
  r.numerator.push_back({fam.synthesis().transpose(), fam.coeff_dual_exponent(), {}, 1.0});
  r.denominator = {K.entries.transpose(), fam.space().q(), fam.space().dual_weights(), 1.0};
  return r;
}

// ||K g|| / ||g|| on X
inline HomogeneousRatio operator_ratio(const LinearOperator &K, const SipSpace &space) {
  HomogeneousRatio r;
  r.numerator.push_back({K.entries, space.p(), space.weights(), 1.0});
  r.denominator = {cmat::Identity(space.dim(), space.dim()), space.p(), space.weights(), 1.0};
  return r;
}

// ||Q* f*|| / ||f*|| on X*
inline HomogeneousRatio dual_operator_ratio(const LinearOperator &Q, const SipSpace &space) {
  HomogeneousRatio r;
  r.numerator.push_back({Q.entries.transpose(), space.q(), space.dual_weights(), 1.0});
  r.denominator = {cmat::Identity(space.dim(), space.dim()), space.q(),
                   space.dual_weights(), 1.0};
  return r;
}

// Whether K* d is zero relative to the size of K and d.
inline bool adjoint_vanishes(const LinearOperator &K, const cvec &d,
                             double rank_rel = Tolerances{}.rank_rel) {
  const double top = linalg::spectral_norm(K.entries);
  return (K.entries.transpose() * d).norm() <= rank_rel * top * d.norm();
}

inline DualVector normalized_dual(const SipSpace &space, cvec d) {
  // fix the global phase: largest coordinate real and positive
  Index k = 0;
  for (Index i = 1; i < d.size(); ++i) {
    if (std::abs(d[i]) > std::abs(d[k]) * (1.0 + 1e-12)) {
      k = i;
    }
  }
  if (std::abs(d[k]) > 0.0) {
    d *= std::abs(d[k]) / d[k];
  }
  DualVector out{std::move(d)};
  const double n = dual_norm(space, out);
  if (n > 0.0) {
    out.action /= n;
  }
  return out;
}

// The direction in null(T) on which K* is largest (Euclidean), if K* does
// not vanish on null(T).
inline std::optional<cvec> kernel_witness(const FrameFamily &fam, const LinearOperator &K,
                                          const Tolerances &tol = {}) {
  const cmat N = linalg::null_space(fam.synthesis().transpose(), tol.rank_rel);
  if (N.cols() == 0) {
    return std::nullopt;
  }
  const cmat M = K.entries.transpose() * N;
  const linalg::Svd s = linalg::svd(M, tol.rank_rel);
  const double top = linalg::spectral_norm(K.entries);
  if (s.sigma.size() == 0 || s.sigma[0] <= tol.rank_rel * top) {
    return std::nullopt;
  }
  return cvec(N * s.V.col(0));
}

// Orthonormal basis (columns) of the complement of ker F^T intersect ker K^T.
inline cmat common_kernel_complement(const FrameFamily &fam, const LinearOperator &K,
                                     double rank_rel) {
  const Index n = fam.dim();
  const double sf = linalg::spectral_norm(fam.synthesis());
  const double sk = linalg::spectral_norm(K.entries);
  cmat stacked(fam.size() + n, n);
  stacked << (sf > 0.0 ? cmat(fam.synthesis().transpose() / sf) : cmat(fam.synthesis().transpose())),
      (sk > 0.0 ? cmat(K.entries.transpose() / sk) : cmat(K.entries.transpose()));
  const cmat common = linalg::null_space(stacked, rank_rel);
  if (common.cols() == 0) {
    return cmat::Identity(n, n);
  }
  return linalg::null_space(common.adjoint(), rank_rel);
}

struct NormEstimate {
  double value = 0.0;
  Vector witness;
  bool converged = false;
};

// sup ||K g|| / ||g|| over X.
inline NormEstimate operator_norm(const LinearOperator &K, const SipSpace &space,
                                  const OptimizerOptions &opts = {}) {
  require_dim(K.cols(), space.dim(), "operator_norm");
  require_dim(K.rows(), space.dim(), "operator_norm");
  NormEstimate out;
  out.witness = unit_vector(space, 0);
  if (K.is_zero()) {
    out.converged = true;
    return out;
  }
  const MultiStartResult r = multistart_maximize(
      operator_ratio(K, space).objective(1.0), 2 * space.dim(), opts,
      structured_starts(K.entries));
  out.value = r.value;
  out.witness = {unpack(r.x)};
  out.witness.coords /= norm(space, out.witness);
  out.converged = r.converged;
  return out;
}

struct OracleValues {
  double A = std::numeric_limits<double>::infinity();
  double B = 0.0;
};

namespace detail {

inline double abs_pow(double a, double r) {
  if (r == 2.0) {
    return a * a;
  }
  if (r == 3.0) {
    return a * a * a;
  }
  if (r == 1.5) {
    return a * std::sqrt(a);
  }
  if (r == 4.0) {
    return (a * a) * (a * a);
  }
  return std::pow(a, r);
}

// out = A d for small dense A, without the library GEMV or checked complex
// multiplication
inline void small_product(const cmat &A, const cvec &d, cvec &out) {
  for (Index i = 0; i < A.rows(); ++i) {
    double re = 0.0, im = 0.0;
    for (Index k = 0; k < A.cols(); ++k) {
      const cplx a = A(i, k), z = d[k];
      re += a.real() * z.real() - a.imag() * z.imag();
      im += a.real() * z.imag() + a.imag() * z.real();
    }
    out[i] = cplx(re, im);
  }
}

// s^{1/r}
inline double abs_root(double s, double r) {
  if (r == 2.0) {
    return std::sqrt(s);
  }
  if (r == 3.0) {
    return std::cbrt(s);
  }
  if (r == 1.5) {
    return std::cbrt(s * s);
  }
  if (r == 4.0) {
    return std::sqrt(std::sqrt(s));
  }
  return std::pow(s, 1.0 / r);
}

inline double power_sum(const cvec &z, double r, const rvec &w) {
  double s = 0.0;
  for (Index k = 0; k < z.size(); ++k) {
    const double wk = w.size() == 0 ? 1.0 : w[k];
    const double m2 = std::norm(z[k]);
    s += wk * (r == 2.0 ? m2 : abs_pow(std::sqrt(m2), r));
  }
  return s;
}

} // namespace detail

// Exhaustive evaluation of both frame ratios on the sphere grid, for every
// operator in `Ks` at once.  Complex dimension at most 3.
inline std::vector<OracleValues> grid_oracle(const FrameFamily &fam,
                                             const std::vector<LinearOperator> &Ks,
                                             int resolution) {
  require(fam.dim() <= 3, "grid_oracle: dimension too large (at most 3 supported)");
  for (const LinearOperator &K : Ks) {
    require_dim(K.rows(), fam.dim(), "grid_oracle");
  }
  const double q = fam.space().q();
  const double qd = fam.coeff_dual_exponent();
  const rvec &dw = fam.space().dual_weights();
  const cmat Ft = fam.synthesis().transpose();
  std::vector<cmat> Kts;
  std::vector<double> tops;
  for (const LinearOperator &K : Ks) {
    Kts.push_back(K.entries.transpose());
    tops.push_back(linalg::spectral_norm(K.entries));
  }
  std::vector<OracleValues> out(Ks.size());
  double best_B = 0.0;
  const rvec none;
  const double rank_rel = Tolerances{}.rank_rel;
  cvec fd(Ft.rows());
  cvec kd(fam.dim());
  visit_sphere_grid(fam.dim(), resolution, [&](const cvec &d) {
    detail::small_product(Ft, d, fd);
    const double num = detail::abs_root(detail::power_sum(fd, qd, none), qd);
    const double den = detail::abs_root(detail::power_sum(d, q, dw), q);
    best_B = std::max(best_B, num / den);
    for (std::size_t k = 0; k < Kts.size(); ++k) {
      detail::small_product(Kts[k], d, kd);
      if (kd.squaredNorm() <= rank_rel * rank_rel * tops[k] * tops[k]) {
        continue;
      }
      const double kden = detail::abs_root(detail::power_sum(kd, q, dw), q);
      out[k].A = std::min(out[k].A, num / kden);
    }
  });
  for (OracleValues &o : out) {
    o.B = best_B;
  }
  return out;
}

inline OracleValues grid_oracle(const FrameFamily &fam, const LinearOperator &K,
                                int resolution) {
  return grid_oracle(fam, std::vector<LinearOperator>{K}, resolution).front();
}

inline CertificationReport certify_k_frame(const FrameFamily &fam, const LinearOperator &K,
                                           const CertifyOptions &opts = {}) {
  require_dim(K.cols(), fam.dim(), "certify_k_frame");
  require_dim(K.rows(), fam.dim(), "certify_k_frame");
  const SipSpace &space = fam.space();
  CertificationReport rep;

  // upper bound
  const BesselBound bessel = bessel_bound(fam, opts.optimizer);
  rep.B_est = bessel.value();
  rep.witness_upper = bessel.witness;
  rep.restarts_used = 2 * (opts.optimizer.restarts);
  rep.converged = bessel.converged;
  if (bessel.disagreement() > 1e-6) {
    rep.notes.push_back("analysis and synthesis norm estimates differ by " +
                        std::to_string(bessel.disagreement()));
  }

  OptimizerOptions knorm_opts = opts.optimizer;
  knorm_opts.seed = split_seed(opts.optimizer.seed, 0x4b4e);
  rep.K_norm_est = operator_norm(K, space, knorm_opts).value;

  // lower bound
  if (K.is_zero()) {
    rep.A_est = std::numeric_limits<double>::infinity();
    rep.witness_lower = {cvec::Zero(fam.dim())};
    rep.notes.push_back("K = 0: the lower inequality is vacuous, A reported as +inf");
  } else {
    // search off the common kernel of T and K*, where the ratio is 0/0
    const cmat P = common_kernel_complement(fam, K, opts.tol.rank_rel);
    HomogeneousRatio ratio = lower_frame_ratio(fam, K);
    ratio.numerator[0].map = ratio.numerator[0].map * P;
    ratio.denominator.map = ratio.denominator.map * P;
    std::vector<rvec> starts;
    const std::optional<cvec> kw = kernel_witness(fam, K, opts.tol);
    if (kw) {
      starts.push_back(pack(cvec(P.adjoint() * *kw)));
    }
    for (const rvec &s : structured_starts(fam.synthesis().transpose())) {
      const cvec c = P.adjoint() * unpack(s);
      if (c.norm() > 1e-8) {
        starts.push_back(pack(c));
      }
    }
    OptimizerOptions lower_opts = opts.optimizer;
    lower_opts.seed = split_seed(opts.optimizer.seed, 0x4c4f);
    const MultiStartResult r =
        multistart_maximize(ratio.objective(-1.0), 2 * P.cols(), lower_opts, starts);
    rep.restarts_used += r.restarts_used;
    rep.converged = rep.converged && r.converged;
    cvec best = P * unpack(r.x);
    double A = -r.value;
    if (kw) {
      const cvec c = P.adjoint() * *kw;
      const double v = ratio.value(c);
      if (!(v >= A)) {
        A = v;
        best = P * c;
      }
    }
    rep.witness_lower = normalized_dual(space, best);
    if (!std::isfinite(A)) {
      rep.verdict = Verdict::BesselOnly;
      rep.notes.push_back("lower ratio could not be evaluated at any start");
    } else if (A < opts.tol.refute_ratio &&
               !adjoint_vanishes(K, rep.witness_lower.action, opts.tol.rank_rel)) {
      rep.A_est = 0.0;
      rep.verdict = Verdict::Refuted;
    } else {
      rep.A_est = A;
    }
  }
  if (!std::isfinite(rep.B_est)) {
    rep.verdict = Verdict::NoBesselBound;
  }
  if (std::isfinite(rep.A_est)) {
    rep.sanity_ok = rep.A_est * rep.K_norm_est <= rep.B_est * (1.0 + 1e-6) + 1e-300;
  }

  if (opts.oracle_resolution > 0) {
    const OracleValues o = grid_oracle(fam, K, opts.oracle_resolution);
    rep.oracle_A = K.is_zero() ? std::numeric_limits<double>::infinity() : o.A;
    rep.oracle_B = o.B;
  }
  return rep;
}

struct MarginReport {
  double margin = 0.0;
  DualVector witness;
  bool bounded_below = false;
};

// inf ||Q* f*|| / ||f*||; positive iff Q* is bounded below.
inline MarginReport bounded_below_margin(const LinearOperator &Q, const SipSpace &space,
                                         const CertifyOptions &opts = {}) {
  require_dim(Q.rows(), space.dim(), "bounded_below_margin");
  require_dim(Q.cols(), space.dim(), "bounded_below_margin");
  MarginReport out;
  const cmat N = linalg::null_space(Q.entries.transpose(), opts.tol.rank_rel);
  if (N.cols() > 0) {
    out.witness = normalized_dual(space, N.col(0));
    return out;
  }
  const MultiStartResult r = multistart_maximize(
      dual_operator_ratio(Q, space).objective(-1.0), 2 * space.dim(), opts.optimizer,
      structured_starts(Q.entries.transpose()));
  out.margin = -r.value;
  out.witness = normalized_dual(space, unpack(r.x));
  out.bounded_below = out.margin >= opts.tol.refute_ratio;
  return out;
}

struct TransformedFamilyReport {
  CertificationReport base;       // {f_j}, K = I
  CertificationReport q_family;   // {Q f_j}, K = I
  MarginReport q_margin;
  bool q_consistent = false;      // margin > 0  <=>  A({Q f_j}) > 0
  CertificationReport k_family;   // {K f_j} as a K-frame
  double K_norm = 0.0;
  bool k_bounds_ok = false;       // A_K >= A (1 - tol),  B_K <= B ||K|| (1 + tol)
  bool passed = false;
};

inline TransformedFamilyReport transformed_family_checks(const FrameFamily &fam,
                                                         const LinearOperator &Q,
                                                         const LinearOperator &K,
                                                         const CertifyOptions &opts = {}) {
  TransformedFamilyReport out;
  const Index n = fam.dim();
  out.base = certify_k_frame(fam, LinearOperator::identity(n), opts);
  require(out.base.verdict == Verdict::KFrame,
          "transformed_family_checks: the base family is not certified as a frame");
  out.q_family = certify_k_frame(fam.transformed(Q), LinearOperator::identity(n), opts);
  out.q_margin = bounded_below_margin(Q, fam.space(), opts);
  const double thr = opts.tol.refute_ratio;
  out.q_consistent = (out.q_margin.margin > thr) == (out.q_family.A_est > thr);

  out.k_family = certify_k_frame(fam.transformed(K), K, opts);
  out.K_norm = operator_norm(K, fam.space(), opts.optimizer).value;
  const double t = opts.tol.transformed_slack;
  out.k_bounds_ok = out.k_family.A_est >= out.base.A_est * (1.0 - t) &&
                    out.k_family.B_est <= out.base.B_est * out.K_norm * (1.0 + t);
  out.passed = out.q_consistent && out.k_bounds_ok;
  return out;
}

} // namespace sipframe

#endif // SIPFRAME_CERTIFIER_HPP_
