#ifndef SIPFRAME_ATOMIC_RECON_HPP_
#define SIPFRAME_ATOMIC_RECON_HPP_

#include <algorithm>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sipframe/certifier.hpp"

// Atomic systems and reconstruction.
//
// An atomic system for K is a family {f_j} such that every Kf admits an
// expansion Kf = sum_j a_j f_j with ||a||_{X_d} <= C ||f||. The smallest
// admissible coefficients are computed by IRLS; the reverse direction is a
// dual family {g_j*} with K* f* = sum_j (T f*)_j g_j*.

namespace sipframe {

class FactorizationError : public PreconditionError {
public:
  FactorizationError(const std::string &msg, DualVector w)
      : PreconditionError(msg), witness(std::move(w)) {}
  DualVector witness;
};

struct MinNormResult {
  CoeffVector coeffs;
  std::vector<double> objective_trace; // sum |a_j|^{p_d}, one entry per iteration
  int iterations = 0;
  double first_order_residual = 0.0;
};

namespace detail {

inline double power_objective(const cvec &a, double p) {
  double s = 0.0;
  for (Index j = 0; j < a.size(); ++j) {
    s += std::pow(std::abs(a[j]), p);
  }
  return s;
}

// |a|^{p-2} a, the Hermitian representative of the duality map of l^p
inline cvec hermitian_dual(const cvec &a, double p) {
  cvec out(a.size());
  for (Index j = 0; j < a.size(); ++j) {
    const double m = std::abs(a[j]);
    out[j] = m > 0.0 ? a[j] * std::pow(m, p - 2.0) : cplx(0.0, 0.0);
  }
  return out;
}

inline double first_order_residual(const cmat &F, const cvec &a, double p, double rank_rel) {
  const cmat N = linalg::null_space(F, rank_rel);
  if (N.cols() == 0) {
    return 0.0;
  }
  const cvec phi = hermitian_dual(a, p);
  const double scale = phi.norm();
  return scale > 0.0 ? (N.adjoint() * phi).norm() / scale : 0.0;
}

// Damped Newton on a = a0 + N z in real coordinates, N an orthonormal basis
// of null(F). Appends the objective after every accepted step.
inline cvec newton_polish(const cmat &F, const cvec &a0, double p, double scale,
                          std::vector<double> &trace, int max_steps = 50) {
  const cmat N = linalg::null_space(F);
  const Index J = a0.size();
  const Index k = N.cols();
  if (k == 0) {
    return a0;
  }
  // real Jacobian of z -> N z
  Eigen::MatrixXd R(2 * J, 2 * k);
  R << N.real(), -N.imag(), N.imag(), N.real();
  cvec a = a0;
  double obj = power_objective(a, p);
  const double floor = 1e-12 * scale;
  for (int step = 0; step < max_steps; ++step) {
    rvec g(2 * J);
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(2 * J, 2 * J);
    for (Index j = 0; j < J; ++j) {
      const double r = std::max(std::abs(a[j]), floor);
      const double x = a[j].real(), y = a[j].imag();
      const double c1 = p * std::pow(r, p - 2.0);
      const double c2 = p * (p - 2.0) * std::pow(r, p - 4.0);
      g[j] = c1 * x;
      g[J + j] = c1 * y;
      H(j, j) = c1 + c2 * x * x;
      H(J + j, J + j) = c1 + c2 * y * y;
      H(j, J + j) = H(J + j, j) = c2 * x * y;
    }
    const rvec gz = R.transpose() * g;
    if (gz.norm() <= 1e-15 * std::max(g.norm(), 1e-300)) {
      break;
    }
    Eigen::MatrixXd Hz = R.transpose() * H * R;
    Hz.diagonal().array() += 1e-14 * Hz.diagonal().cwiseAbs().maxCoeff();
    const rvec dz = -Hz.ldlt().solve(gz);
    const cvec da = N * cvec(dz.head(k).cast<cplx>() + cplx(0.0, 1.0) * dz.tail(k).cast<cplx>());
    double t = 1.0;
    double trial = power_objective(a + da, p);
    while (trial > obj && t > 1e-10) {
      t *= 0.5;
      trial = power_objective(a + t * da, p);
    }
    if (trial > obj) {
      break;
    }
    a += t * da;
    obj = trial;
    trace.push_back(obj);
    if (t * da.norm() <= 1e-15 * a.norm()) {
      break;
    }
  }
  return a;
}

} // namespace detail

// argmin ||a||_p subject to F a = y. Throws PreconditionError if y is not in
// the range of F, NumericalFailure if IRLS neither converges nor passes the
// first-order check.
inline MinNormResult min_norm_solve(const cmat &F, const cvec &y, double p,
                                    const Tolerances &tol = {}) {
  require_dim(y.size(), F.rows(), "min_norm_solve");
  MinNormResult out;
  const cmat Fp = linalg::pinv(F, tol.rank_rel);
  cvec a = Fp * y;
  const double ynorm = y.norm();
  if ((F * a - y).norm() > tol.span_membership * ynorm) {
    throw PreconditionError("min_norm_solve: target is not in the span of the family");
  }
  if (ynorm == 0.0) {
    out.coeffs = {cvec::Zero(F.cols())};
    return out;
  }
  if (p == 2.0) {
    out.coeffs = {a};
    out.objective_trace.push_back(a.squaredNorm());
    return out;
  }

  const double scale = a.cwiseAbs().maxCoeff();
  const double floor = tol.irls_eps_floor * scale;
  double eps = tol.irls_eps_start * scale;
  double obj = detail::power_objective(a, p);
  out.objective_trace.push_back(obj);
  bool converged = false;
  int quiet = 0;
  for (int it = 0; it < tol.irls_max_iterations; ++it) {
    out.iterations = it + 1;
    rvec sqrt_d(a.size());
    for (Index j = 0; j < a.size(); ++j) {
      sqrt_d[j] = std::pow(std::norm(a[j]) + eps * eps, (2.0 - p) / 4.0);
    }
    const cmat Fs = F * sqrt_d.asDiagonal();
    cvec cand = sqrt_d.asDiagonal() * (linalg::pinv(Fs, 1e-14) * y);
    cand += Fp * (y - F * cand);

    // backtrack along a -> cand; the segment stays feasible
    const cvec step = cand - a;
    double t = 1.0;
    double trial = detail::power_objective(a + step, p);
    while (trial > obj + 1e-12 * obj && t > 1e-6) {
      t *= 0.5;
      trial = detail::power_objective(a + t * step, p);
    }
    const bool moved = trial <= obj + 1e-12 * obj;
    double change = 0.0;
    if (moved) {
      const cvec next = a + t * step;
      change = (next - a).norm() / std::max(next.norm(), 1e-300);
      a = next;
      obj = std::min(obj, trial);
    }
    out.objective_trace.push_back(obj);
    if (eps <= floor) {
      quiet = change < 1e-14 ? quiet + 1 : 0;
      if (quiet >= 2) {
        converged = true;
        break;
      }
    }
    eps = std::max(floor, 0.5 * eps);
  }
  out.first_order_residual = detail::first_order_residual(F, a, p, tol.rank_rel);
  if (out.first_order_residual > 1e-2 * tol.first_order) {
    a = detail::newton_polish(F, a, p, scale, out.objective_trace);
    out.first_order_residual = detail::first_order_residual(F, a, p, tol.rank_rel);
  }
  out.coeffs = {a};
  if (!converged && out.first_order_residual > tol.first_order) {
    throw NumericalFailure("min_norm_solve: IRLS did not converge after " +
                           std::to_string(tol.irls_max_iterations) +
                           " iterations (first-order residual " +
                           std::to_string(out.first_order_residual) + ")");
  }
  return out;
}

inline CoeffVector min_norm_coeffs(const FrameFamily &fam, const LinearOperator &K,
                                   const Vector &f, const Tolerances &tol = {}) {
  require_dim(K.cols(), fam.dim(), "min_norm_coeffs");
  require_dim(K.rows(), fam.dim(), "min_norm_coeffs");
  require_dim(f.coords.size(), fam.dim(), "min_norm_coeffs");
  return min_norm_solve(fam.synthesis(), K.entries * f.coords, fam.coeff_exponent(), tol)
      .coeffs;
}

// Whether R(K) lies in the span of the family, by least squares on a basis
// of R(K).
inline bool range_inclusion(const FrameFamily &fam, const LinearOperator &K,
                            const Tolerances &tol = {}) {
  const cmat R = linalg::range_basis(K.entries, tol.rank_rel);
  if (R.cols() == 0) {
    return true;
  }
  const cmat &F = fam.synthesis();
  const cmat resid = F * (linalg::pinv(F, tol.rank_rel) * R) - R;
  for (Index i = 0; i < R.cols(); ++i) {
    if (resid.col(i).norm() > tol.span_membership) {
      return false;
    }
  }
  return true;
}

struct AtomicConstant {
  double value = 0.0;
  Vector witness;
  int samples = 0;
  bool converged = false;
};

// sup ||min_norm_coeffs(f)|| / ||f|| over X.
inline AtomicConstant atomic_constant(const FrameFamily &fam, const LinearOperator &K,
                                      int sample_count, const CertifyOptions &opts = {}) {
  require_dim(K.cols(), fam.dim(), "atomic_constant");
  require_dim(K.rows(), fam.dim(), "atomic_constant");
  const SipSpace &space = fam.space();
  const Index n = fam.dim();
  const cmat &F = fam.synthesis();
  const double p = space.p();
  const double pd = fam.coeff_exponent();
  AtomicConstant out;
  out.witness = unit_vector(space, 0);
  if (K.is_zero()) {
    out.converged = true;
    return out;
  }
  if (!range_inclusion(fam, K, opts.tol)) {
    throw PreconditionError("atomic_constant: R(K) is not contained in the span of the family");
  }

  Objective objective;
  if (pd == 2.0) {
    // the coefficient map F^+ K is linear
    HomogeneousRatio r;
    r.numerator.push_back({linalg::pinv(F, opts.tol.rank_rel) * K.entries, 2.0, {}, 1.0});
    r.denominator = {cmat::Identity(n, n), p, space.weights(), 1.0};
    objective = r.objective(1.0);
  } else {
    const cmat Fh_pinv = linalg::pinv(F.adjoint(), opts.tol.rank_rel);
    const Tolerances tol = opts.tol;
    objective = [&, Fh_pinv, tol](const rvec &x, rvec *grad) {
      const cvec f = unpack(x);
      const double nf = weighted_lp_norm(f, p, space.weights());
      const cvec y = K.entries * f;
      if (nf == 0.0) {
        if (grad != nullptr) {
          grad->resize(0);
        }
        return std::numeric_limits<double>::quiet_NaN();
      }
      const cvec a = min_norm_solve(F, y, pd, tol).coeffs.values;
      const double m = weighted_lp_norm(a, pd);
      const double ratio = m / nf;
      if (grad != nullptr) {
        if (m == 0.0) {
          grad->resize(0);
        } else {
          // the gradient of y -> min ||a|| is the dual maximizer lambda,
          // F^H lambda = |a|^{p_d-2} a / ||a||^{p_d-1}
          const cvec lambda =
              Fh_pinv * detail::hermitian_dual(a, pd) / std::pow(m, pd - 1.0);
          const rvec gm = pack(K.entries.adjoint() * lambda);
          cvec nd(n);
          for (Index i = 0; i < n; ++i) {
            const double mod = std::abs(f[i]);
            nd[i] = mod > 0.0 ? space.weights()[i] * std::pow(mod, p - 2.0) * f[i]
                              : cplx(0.0, 0.0);
          }
          const rvec gn = pack(nd) * std::pow(nf, 1.0 - p);
          *grad = (gm - ratio * gn) / nf;
        }
      }
      return ratio;
    };
  }

  std::vector<rvec> starts;
  for (Index i = 0; i < n; ++i) {
    starts.push_back(pack(cvec::Unit(n, i)));
  }
  for (int s = 0; s < sample_count; ++s) {
    starts.push_back(random_start(2 * n, split_seed(opts.optimizer.seed, 0x5a00 + s)));
  }
  // sampling pass: evaluate every start before optimizing
  double best = 0.0;
  cvec best_f = cvec::Unit(n, 0);
  for (const rvec &s : starts) {
    const double v = objective(s, nullptr);
    if (v > best) {
      best = v;
      best_f = unpack(s);
    }
  }
  out.samples = static_cast<int>(starts.size());
  OptimizerOptions o = opts.optimizer;
  o.seed = split_seed(opts.optimizer.seed, 0x4143);
  const MultiStartResult r = multistart_maximize(objective, 2 * n, o, starts);
  out.converged = r.converged;
  if (r.value > best) {
    best = r.value;
    best_f = unpack(r.x);
  }
  out.value = best;
  out.witness = {best_f};
  out.witness.coords /= norm(space, out.witness);
  return out;
}

struct DualFamily {
  std::vector<DualVector> gstars;
  LinearOperator Q; // K* = Q T as matrices; column j of Q is g_j*
  double bessel = 0.0; // sup_g ||{g_j*(g)}||_{X_d} / ||g||
};

// Q = K^T (F^T)^+ without any precondition check.
inline LinearOperator factorization_unchecked(const FrameFamily &fam, const LinearOperator &K,
                                              const Tolerances &tol = {}) {
  return {K.entries.transpose() * linalg::pinv(fam.synthesis().transpose(), tol.rank_rel)};
}

// Max over `trials` random f* of ||K* f* - Q T f*|| / ||f*||, Euclidean.
inline std::pair<double, DualVector> reconstruction_residual(const FrameFamily &fam,
                                                             const LinearOperator &K,
                                                             const LinearOperator &Q,
                                                             std::uint64_t seed,
                                                             int trials = 100) {
  const Index n = fam.dim();
  std::pair<double, DualVector> worst{0.0, {cvec::Zero(n)}};
  const cmat diff = K.entries.transpose() - Q.entries * fam.synthesis().transpose();
  const double scale = std::max(linalg::spectral_norm(K.entries), 1e-300);
  for (int t = 0; t < trials; ++t) {
    const cvec d = unpack(random_start(2 * n, split_seed(seed, 0x7200 + t)));
    const double r = (diff * d).norm() / (scale * d.norm());
    if (r > worst.first) {
      worst = {r, {d}};
    }
  }
  return worst;
}

inline DualFamily construct_dual_family(const FrameFamily &fam, const LinearOperator &K,
                                        const CertifyOptions &opts = {},
                                        bool estimate_bessel = true) {
  require_dim(K.cols(), fam.dim(), "construct_dual_family");
  require_dim(K.rows(), fam.dim(), "construct_dual_family");
  if (const std::optional<cvec> w = kernel_witness(fam, K, opts.tol)) {
    throw FactorizationError(
        "construct_dual_family: K* does not vanish on null(T), no factorization K* = QT",
        normalized_dual(fam.space(), *w));
  }
  DualFamily out;
  out.Q = factorization_unchecked(fam, K, opts.tol);
  for (Index j = 0; j < fam.size(); ++j) {
    out.gstars.push_back({out.Q.entries.col(j)});
  }
  if (estimate_bessel && !out.Q.is_zero()) {
    // g -> {g_j*(g)} = Q^T g from X to X_d
    HomogeneousRatio r;
    r.numerator.push_back({out.Q.entries.transpose(), fam.coeff_exponent(), {}, 1.0});
    r.denominator = {cmat::Identity(fam.dim(), fam.dim()), fam.space().p(),
                     fam.space().weights(), 1.0};
    OptimizerOptions o = opts.optimizer;
    o.seed = split_seed(opts.optimizer.seed, 0x4446);
    out.bessel = multistart_maximize(r.objective(1.0), 2 * fam.dim(), o,
                                     structured_starts(out.Q.entries.transpose()))
                     .value;
  }
  return out;
}

// mu_j(f) = sip(f, g_j) on X0 = span(subspace_basis).
struct LocalAtomFamily {
  FrameFamily fam;
  std::vector<Vector> subspace_basis;
  std::vector<Vector> mu;

  // rows are the functionals dualize(g_j)
  cmat functionals() const {
    require(static_cast<Index>(mu.size()) == fam.size(),
            "LocalAtomFamily: one functional per family member");
    cmat M(fam.size(), fam.dim());
    for (Index j = 0; j < fam.size(); ++j) {
      M.row(j) = dualize(fam.space(), mu[static_cast<std::size_t>(j)]).action.transpose();
    }
    return M;
  }

  cmat basis() const {
    cmat B(fam.dim(), static_cast<Index>(subspace_basis.size()));
    for (std::size_t i = 0; i < subspace_basis.size(); ++i) {
      require_dim(subspace_basis[i].coords.size(), fam.dim(), "LocalAtomFamily basis");
      B.col(static_cast<Index>(i)) = subspace_basis[i].coords;
    }
    return B;
  }
};

struct LocalAtomReport {
  double C = 0.0;
  Vector C_witness;
  bool coefficients_bounded = false;
  double reproduction_error = 0.0;
  Vector reproduction_witness;
  bool reproduction_ok = false;
  double restricted_A = std::numeric_limits<double>::infinity();
  bool lower_bound_ok = false;
  bool vacuous = false;
  bool passed = false;
};

inline LocalAtomReport check_local_atoms(const LocalAtomFamily &laf,
                                         const CertifyOptions &opts = {}) {
  const FrameFamily &fam = laf.fam;
  const SipSpace &space = fam.space();
  const cmat M = laf.functionals();
  LocalAtomReport out;
  out.C_witness = {cvec::Zero(fam.dim())};
  out.reproduction_witness = out.C_witness;
  const cmat B0 = laf.basis();
  const cmat B = B0.cols() == 0 ? B0 : linalg::range_basis(B0, opts.tol.rank_rel);
  if (B.cols() == 0) {
    out.vacuous = true;
    out.coefficients_bounded = out.reproduction_ok = out.lower_bound_ok = out.passed = true;
    return out;
  }
  const Index k = B.cols();
  const Index m = 2 * k;

  // (a) C = sup ||M f||_{X_d} / ||f|| over f = B z; mu is not linear off the
  // Hilbert case, so the search is derivative-free
  const cmat &F = fam.synthesis();
  const double pd = fam.coeff_exponent();
  const Objective coeff_ratio = [&](const rvec &x, rvec *grad) {
    if (grad != nullptr) {
      grad->resize(0);
    }
    const cvec f = B * unpack(x);
    const double nf = weighted_lp_norm(f, space.p(), space.weights());
    return weighted_lp_norm(M * f, pd) / nf;
  };
  std::vector<rvec> starts;
  for (Index i = 0; i < k; ++i) {
    starts.push_back(pack(cvec::Unit(k, i)));
  }
  OptimizerOptions o = opts.optimizer;
  o.derivative_free = true;
  o.seed = split_seed(opts.optimizer.seed, 0x4c41);
  const MultiStartResult rc = multistart_maximize(coeff_ratio, m, o, starts);
  out.C = rc.value;
  out.C_witness = {B * unpack(rc.x)};
  out.C_witness.coords /= norm(space, out.C_witness);
  out.coefficients_bounded = std::isfinite(out.C);

  // (b) f = sum_j mu_j(f) f_j on the basis and at random points of X0
  auto reproduce = [&](const cvec &f) {
    return (F * (M * f) - f).norm() / std::max(f.norm(), 1e-300);
  };
  auto consider = [&](const cvec &f) {
    const double e = reproduce(f);
    if (e > out.reproduction_error || out.reproduction_witness.coords.isZero(0.0)) {
      out.reproduction_error = std::max(out.reproduction_error, e);
      out.reproduction_witness = {f};
    }
  };
  for (Index i = 0; i < k; ++i) {
    consider(B.col(i));
  }
  for (int t = 0; t < 32; ++t) {
    consider(B * unpack(random_start(m, split_seed(opts.optimizer.seed, 0x5200 + t))));
  }
  out.reproduction_ok = out.reproduction_error <= opts.tol.local_reproduction;

  // (c) ||T f*|| >= ||f*|_{X0}|| / C along f* = dualize(f), f in X0, where
  // the restricted norm equals ||f||
  const Objective lower = [&](const rvec &x, rvec *grad) {
    if (grad != nullptr) {
      grad->resize(0);
    }
    const Vector f{B * unpack(x)};
    const double nf = norm(space, f);
    const DualVector d = dualize(space, f);
    return -weighted_lp_norm(F.transpose() * d.action, fam.coeff_dual_exponent()) / nf;
  };
  o.seed = split_seed(opts.optimizer.seed, 0x4c42);
  const MultiStartResult rl = multistart_maximize(lower, m, o, starts);
  out.restricted_A = -rl.value;
  out.lower_bound_ok = out.C > 0.0 &&
                       out.restricted_A >= (1.0 / out.C) * (1.0 - opts.tol.bessel_slack);
  out.passed = out.coefficients_bounded && out.reproduction_ok && out.lower_bound_ok;
  return out;
}

struct EquivalenceReport {
  bool atomic = false;     // (i)
  bool k_frame = false;    // (ii)
  bool dual_family = false; // (iii)
  AtomicConstant C;
  CertificationReport certificate;
  double reconstruction_residual = 0.0;
  DualVector reconstruction_witness;
  std::optional<Vector> infeasible_witness;
  bool range_inclusion = false;
  bool agree = false;
  std::vector<std::string> failures;
};

inline EquivalenceReport equivalence_harness(const FrameFamily &fam, const LinearOperator &K,
                                             const CertifyOptions &opts = {},
                                             int sample_count = 16) {
  EquivalenceReport out;
  const Index n = fam.dim();

  // (i): feasibility of K e_i for every basis vector, then a finite constant
  bool feasible = true;
  for (Index i = 0; i < n && feasible; ++i) {
    try {
      min_norm_coeffs(fam, K, unit_vector(fam.space(), i), opts.tol);
    } catch (const PreconditionError &) {
      feasible = false;
      out.infeasible_witness = unit_vector(fam.space(), i);
    }
  }
  if (feasible) {
    out.C = atomic_constant(fam, K, sample_count, opts);
    out.atomic = std::isfinite(out.C.value);
  }

  // (ii)
  out.certificate = certify_k_frame(fam, K, opts);
  out.k_frame = out.certificate.verdict == Verdict::KFrame && out.certificate.A_est > 0.0;

  // (iii): the factorization is built blindly and judged by its residual
  const LinearOperator Q = factorization_unchecked(fam, K, opts.tol);
  const auto [res, wit] =
      reconstruction_residual(fam, K, Q, split_seed(opts.optimizer.seed, 0x4551));
  out.reconstruction_residual = res;
  out.reconstruction_witness = wit;
  out.dual_family = res <= opts.tol.reconstruction;

  out.range_inclusion = range_inclusion(fam, K, opts.tol);
  if (out.k_frame && !out.range_inclusion) {
    out.failures.push_back("A > 0 but R(K) is not contained in R(U)");
  }
  if (out.atomic != out.k_frame) {
    out.failures.push_back(out.atomic ? "(i) holds but (ii) fails" : "(ii) holds but (i) fails");
  }
  if (out.k_frame != out.dual_family) {
    out.failures.push_back(out.k_frame ? "(ii) holds but (iii) fails"
                                       : "(iii) holds but (ii) fails");
  }
  out.agree = out.failures.empty();
  return out;
}

} // namespace sipframe

#endif // SIPFRAME_ATOMIC_RECON_HPP_
