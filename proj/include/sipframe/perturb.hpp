#ifndef SIPFRAME_PERTURB_HPP_
#define SIPFRAME_PERTURB_HPP_

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "sipframe/certifier.hpp"

// Perturbation of X_d*-K-frames. If {g_j} is close to an X_d*-K-frame {f_j}
// in the sense
//
//   ||sum c_j (f_j - g_j)|| <= alpha ||sum c_j f_j|| + beta ||sum c_j g_j||
//                              + gamma ||c||_{X_d}
//
// and max{beta, alpha + gamma ||K^+|| / A} < 1, then {g_j} is Bessel and an
// X_d*-PK-frame, P the projection onto V Phi U*(R(K*)).

namespace sipframe {

struct PseudoInverse {
  LinearOperator source;
  LinearOperator dagger;
  double norm_est = 0.0; // ||K^+|| on X
  Vector norm_witness;
  // R(K) = R(K^H). Only then does ||f*|| <= ||K^+|| ||K* f*|| hold on all of
  // R(K*); in general it holds on R((K K^+)*).
  bool range_hermitian = false;
};

// Moore-Penrose inverse (Euclidean-orthogonal complements); the norm is
// measured in the space's own norm.
inline PseudoInverse pseudo_inverse(const LinearOperator &K, const SipSpace &space,
                                    const CertifyOptions &opts = {}) {
  require_dim(K.rows(), space.dim(), "pseudo_inverse");
  require_dim(K.cols(), space.dim(), "pseudo_inverse");
  PseudoInverse out;
  out.source = K;
  out.dagger = {linalg::pinv(K.entries, opts.tol.rank_rel)};
  OptimizerOptions o = opts.optimizer;
  o.seed = split_seed(opts.optimizer.seed, 0x5049);
  const NormEstimate n = operator_norm(out.dagger, space, o);
  out.norm_est = n.value;
  out.norm_witness = n.witness;
  const cmat P = linalg::range_projector(K.entries, opts.tol.rank_rel);
  const cmat Kh = K.entries.adjoint();
  out.range_hermitian =
      (Kh - P * Kh).norm() <= 1e-8 * std::max(K.entries.norm(), 1e-300);
  return out;
}

struct PerturbationInstance {
  FrameFamily fam_f;
  FrameFamily fam_g;
  LinearOperator K;
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;

  void validate() const {
    require(fam_f.space() == fam_g.space(), "perturbation: families live in different spaces");
    require(fam_f.coeff_exponent() == fam_g.coeff_exponent(),
            "perturbation: families use different coefficient exponents");
    require_dim(fam_g.size(), fam_f.size(), "perturbation family size");
    require_dim(K.rows(), fam_f.dim(), "perturbation K");
    require_dim(K.cols(), fam_f.dim(), "perturbation K");
    require(alpha >= 0.0 && beta >= 0.0 && gamma >= 0.0,
            "perturbation: alpha, beta, gamma must be nonnegative");
  }
};

struct PremiseReport {
  double M = -std::numeric_limits<double>::infinity(); // optimizer sup
  std::optional<double> M_oracle;
  CoeffVector witness;
  bool holds = false;
  std::string certified_by; // "oracle-certified" or "optimizer-certified"
};

// M = sup_{c != 0} [||(G - F) c|| - alpha ||F c|| - beta ||G c||] / ||c||_{X_d}.
inline PremiseReport verify_premise(const PerturbationInstance &inst,
                                    const CertifyOptions &opts = {}) {
  inst.validate();
  const SipSpace &space = inst.fam_f.space();
  const cmat &F = inst.fam_f.synthesis();
  const cmat &G = inst.fam_g.synthesis();
  const Index J = F.cols();
  const double pd = inst.fam_f.coeff_exponent();

  HomogeneousRatio r;
  r.numerator.push_back({G - F, space.p(), space.weights(), 1.0});
  if (inst.alpha > 0.0) {
    r.numerator.push_back({F, space.p(), space.weights(), -inst.alpha});
  }
  if (inst.beta > 0.0) {
    r.numerator.push_back({G, space.p(), space.weights(), -inst.beta});
  }
  r.denominator = {cmat::Identity(J, J), pd, {}, 1.0};

  PremiseReport out;
  std::vector<rvec> starts;
  for (Index j = 0; j < J; ++j) {
    starts.push_back(pack(cvec::Unit(J, j)));
  }
  OptimizerOptions o = opts.optimizer;
  o.seed = split_seed(opts.optimizer.seed, 0x5052);
  const MultiStartResult m = multistart_maximize(r.objective(1.0), 2 * J, o, starts);
  out.M = m.value;
  out.witness = {unpack(m.x)};
  double worst = out.M;
  out.certified_by = "optimizer-certified";
  if (J <= 3 && opts.oracle_resolution > 0) {
    double best = -std::numeric_limits<double>::infinity();
    cvec arg = cvec::Unit(J, 0);
    visit_sphere_grid(J, opts.oracle_resolution, [&](const cvec &c) {
      const double v = r.value(c);
      if (v > best) {
        best = v;
        arg = c;
      }
    });
    out.M_oracle = best;
    out.certified_by = "oracle-certified";
    if (best > worst) {
      worst = best;
      out.witness = {arg};
    }
  }
  out.witness.values /= weighted_lp_norm(out.witness.values, pd);
  const double ref = linalg::spectral_norm(F) + linalg::spectral_norm(G);
  out.holds = worst <= inst.gamma * (1.0 + opts.tol.premise_slack) + 1e-12 * ref;
  return out;
}

// alpha + gamma ||K^+|| / A, with ||Phi|| = 1
inline double perturbation_theta(const PerturbationInstance &inst, double A_est,
                                 const PseudoInverse &dag) {
  require(A_est > 0.0, "smallness condition: A must be positive");
  return inst.alpha + (std::isinf(A_est) ? 0.0 : inst.gamma * dag.norm_est / A_est);
}

inline bool smallness_condition(const PerturbationInstance &inst, double A_est,
                                const PseudoInverse &dag) {
  return std::max(inst.beta, perturbation_theta(inst, A_est, dag)) < 1.0;
}

// Q~ f* = V Phi(U* f*)
inline Vector perturbed_operator(const PerturbationInstance &inst, const DualVector &fstar) {
  const CoeffVector phi = coeff_duality_map(inst.fam_f, analyze(inst.fam_f, fstar));
  return synthesize(inst.fam_g, phi);
}

struct FrameOperatorBounds {
  double worst_quadratic_lower = std::numeric_limits<double>::infinity(); // f*(Sf*) / (A^2 ||K* f*||^2)
  double worst_quadratic_upper = 0.0;      // f*(Sf*) / (B^2 ||f*||^2)
  double worst_range_lower = std::numeric_limits<double>::infinity();     // ||Sf*|| / (A^2 ||K^+||^-2 ||f*||)
  double worst_range_upper = 0.0;          // ||Sf*|| / (B^2 ||f*||)
  double worst_analysis = 0.0;             // ||Tf*|| / (A^-1 ||K^+|| ||Sf*||)
  bool passed = false;
};

// Bounds of the frame operator S = U Phi T given certified A, B and ||K^+||;
// the range statements are sampled on f* = K* e.
inline FrameOperatorBounds frame_operator_bounds(const FrameFamily &fam, const LinearOperator &K,
                                                 double A, double B, const PseudoInverse &dag,
                                                 std::uint64_t seed, int samples = 200,
                                                 double slack = 1e-6) {
  const SipSpace &space = fam.space();
  const Index n = fam.dim();
  FrameOperatorBounds out;
  for (int s = 0; s < samples; ++s) {
    const cvec e = unpack(random_start(2 * n, split_seed(seed, 0x4642 + s)));
    // general f*
    {
      const DualVector d{e};
      const double quad = apply(d, frame_operator(fam, d)).real();
      const double kd = dual_norm(space, K.adjoint(d));
      if (kd > 0.0 && std::isfinite(A)) {
        out.worst_quadratic_lower =
            std::min(out.worst_quadratic_lower, quad / (A * A * kd * kd));
      }
      const double nd = dual_norm(space, d);
      out.worst_quadratic_upper = std::max(out.worst_quadratic_upper, quad / (B * B * nd * nd));
    }
    // f* in R(K*)
    const DualVector d = K.adjoint({e});
    const double nd = dual_norm(space, d);
    if (nd == 0.0) {
      continue;
    }
    const double sn = norm(space, frame_operator(fam, d));
    const double tn = coeff_dual_norm(fam, analyze(fam, d));
    if (std::isfinite(A)) {
      out.worst_range_lower = std::min(
          out.worst_range_lower, sn / (A * A / (dag.norm_est * dag.norm_est) * nd));
      out.worst_analysis = std::max(out.worst_analysis, tn / (dag.norm_est / A * sn));
    }
    out.worst_range_upper = std::max(out.worst_range_upper, sn / (B * B * nd));
  }
  out.passed = out.worst_quadratic_lower >= 1.0 - slack && out.worst_quadratic_upper <= 1.0 + slack &&
               out.worst_range_lower >= 1.0 - slack && out.worst_range_upper <= 1.0 + slack &&
               out.worst_analysis <= 1.0 + slack;
  return out;
}

struct ConclusionReport {
  double A = 0.0;
  double B = 0.0;
  double K_norm = 0.0;
  double dagger_norm = 0.0;
  double theta = 0.0; // alpha + gamma ||K^+|| / A

  double B_g = 0.0;
  double B_g_bound = 0.0;
  bool bessel_ok = false;

  bool projection_checked = false; // only for p_d = 2
  LinearOperator P;
  double P_norm = 0.0;
  CertificationReport pk_certificate;
  double lower_formula = 0.0;          // (1 - theta) A^2 ||K^+||^-2 / (B (1 + beta) ||K||)
  double lower_formula_literal = 0.0;  // (1 - theta A^2 ||K^+||^-2) / (B (1 + beta) ||K||)
  bool lower_ok = false;

  double sandwich_lower = 0.0; // (1 - theta) / (1 + beta)
  double sandwich_upper = 0.0; // (1 + theta) / (1 - beta)
  double worst_lower_ratio = std::numeric_limits<double>::infinity(); // min ||Q~f*|| / ||Sf*||
  double worst_upper_ratio = 0.0;
  DualVector sandwich_witness;
  bool sandwich_ok = false;

  std::vector<std::string> notes;
  bool passed = false;
};

// Requires the premise and the smallness condition; throws PreconditionError
// otherwise.
inline ConclusionReport verify_conclusion(const PerturbationInstance &inst,
                                          const CertifyOptions &opts = {}, int samples = 200) {
  inst.validate();
  require(inst.beta < 1.0, "verify_conclusion: beta must be < 1");
  const FrameFamily &f = inst.fam_f;
  const FrameFamily &g = inst.fam_g;
  const SipSpace &space = f.space();
  const Index n = f.dim();
  const Tolerances &tol = opts.tol;

  ConclusionReport out;
  const CertificationReport cert = certify_k_frame(f, inst.K, opts);
  require(cert.verdict == Verdict::KFrame && cert.A_est > 0.0,
          "verify_conclusion: {f_j} is not certified as a K-frame");
  out.A = cert.A_est;
  out.B = cert.B_est;
  out.K_norm = cert.K_norm_est;
  const PseudoInverse dag = pseudo_inverse(inst.K, space, opts);
  out.dagger_norm = dag.norm_est;
  require(verify_premise(inst, opts).holds, "verify_conclusion: the premise does not hold");
  require(smallness_condition(inst, out.A, dag),
          "verify_conclusion: the smallness condition does not hold");
  out.theta = perturbation_theta(inst, out.A, dag);
  if (!dag.range_hermitian) {
    out.notes.push_back("R(K) != R(K^H): ||f*|| <= ||K^+|| ||K* f*|| may fail on R(K*)");
  }

  // (a) Bessel bound of {g_j}
  out.B_g = bessel_bound(g, opts.optimizer).value();
  out.B_g_bound = ((1.0 + inst.alpha) * out.B + inst.gamma) / (1.0 - inst.beta);
  out.bessel_ok = out.B_g <= out.B_g_bound * (1.0 + tol.bessel_slack);

  // (c) sandwich on f* in R(K*)
  out.sandwich_lower = (1.0 - out.theta) / (1.0 + inst.beta);
  out.sandwich_upper = (1.0 + out.theta) / (1.0 - inst.beta);
  out.sandwich_witness = {cvec::Zero(n)};
  bool sandwich_ok = true;
  for (int s = 0; s < samples; ++s) {
    const cvec e = unpack(random_start(2 * n, split_seed(opts.optimizer.seed, 0x5357 + s)));
    const DualVector d = inst.K.adjoint({e});
    const double sn = norm(space, frame_operator(f, d));
    if (sn == 0.0) {
      continue;
    }
    const double qn = norm(space, perturbed_operator(inst, d));
    const double ratio = qn / sn;
    if (ratio < out.worst_lower_ratio) {
      out.worst_lower_ratio = ratio;
      if (ratio < out.sandwich_lower * (1.0 - tol.sandwich_slack)) {
        out.sandwich_witness = d;
      }
    }
    if (ratio > out.worst_upper_ratio) {
      out.worst_upper_ratio = ratio;
      if (ratio > out.sandwich_upper * (1.0 + tol.sandwich_slack)) {
        out.sandwich_witness = d;
      }
    }
    sandwich_ok = sandwich_ok && ratio >= out.sandwich_lower * (1.0 - tol.sandwich_slack) &&
                  ratio <= out.sandwich_upper * (1.0 + tol.sandwich_slack);
  }
  out.sandwich_ok = sandwich_ok;

  // (b) PK-frame bound, p_d = 2 only: V Phi U* is conjugate-linear there, so
  // its image of R(K*) is a subspace
  if (f.coeff_exponent() != 2.0) {
    out.lower_ok = true;
    out.notes.push_back("p_d != 2: V Phi U* is nonlinear, the PK-frame step is not checked");
  } else if (inst.K.is_zero()) {
    out.lower_ok = true;
    out.notes.push_back("K = 0: the PK-frame statement is vacuous");
  } else {
    out.projection_checked = true;
    const cmat R = linalg::range_basis(inst.K.entries.transpose(), tol.rank_rel);
    cmat image(n, R.cols());
    for (Index i = 0; i < R.cols(); ++i) {
      image.col(i) = perturbed_operator(inst, {R.col(i)}).coords;
    }
    out.P = {linalg::range_projector(image, tol.rank_rel)};
    OptimizerOptions o = opts.optimizer;
    o.seed = split_seed(opts.optimizer.seed, 0x504e);
    out.P_norm = operator_norm(out.P, space, o).value;
    const LinearOperator PK{out.P.entries * inst.K.entries};
    out.pk_certificate = certify_k_frame(g, PK, opts);
    const double ratio = out.A * out.A / (dag.norm_est * dag.norm_est);
    const double den = out.B * (1.0 + inst.beta) * out.K_norm;
    out.lower_formula = (1.0 - out.theta) * ratio / den;
    out.lower_formula_literal = (1.0 - out.theta * ratio) / den;
    out.lower_ok = out.pk_certificate.verdict == Verdict::KFrame &&
                   out.pk_certificate.A_est >= out.lower_formula * (1.0 - tol.lower_bound_slack);
    if (out.P_norm > 1.0 + 1e-9) {
      out.notes.push_back("||P|| = " + std::to_string(out.P_norm) +
                          " > 1 in this norm; the bound is only proven up to that factor");
    }
  }
  out.passed = out.bessel_ok && out.sandwich_ok && out.lower_ok;
  return out;
}

} // namespace sipframe

#endif // SIPFRAME_PERTURB_HPP_
