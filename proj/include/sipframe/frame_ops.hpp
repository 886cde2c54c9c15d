#ifndef SIPFRAME_FRAME_OPS_HPP_
#define SIPFRAME_FRAME_OPS_HPP_

#include <functional>
#include <random>
#include <utility>
#include <vector>

#include "sipframe/linalg.hpp"
#include "sipframe/optimizer.hpp"
#include "sipframe/sip_space.hpp"

// Finite frame families {f_j} in a weighted l^p space X together with the
// coefficient space X_d = l^{p_d}(J) (unweighted).  Functionals on X_d are
// kept as their coefficient lists c_j = c(e_j).
//
//   analysis   T f* = { f*(f_j) }            X*    -> X_d*
//   synthesis  U c  = sum_j c_j f_j          X_d   -> X
//   Phi        duality map of X_d*           X_d*  -> X_d
//   frame op.  S    = U Phi T                X*    -> X

namespace sipframe {

// Element of X_d.
struct CoeffVector {
  cvec values;
};

// Functional on X_d, by its values on the canonical vectors.
struct CoeffDualVector {
  cvec values;
};

// A dense operator on coordinates.  Its adjoint acts on action coefficients
// through the plain transpose: (K* d)(g) = d(K g).
struct LinearOperator {
  cmat entries;

  static LinearOperator identity(Index n) { return {cmat::Identity(n, n)}; }
  static LinearOperator zero(Index n) { return {cmat::Zero(n, n)}; }
  static LinearOperator diagonal(const cvec &diag) {
    return {cmat(diag.asDiagonal())};
  }

  Index rows() const { return entries.rows(); }
  Index cols() const { return entries.cols(); }

  Vector apply(const Vector &f) const {
    require_dim(f.coords.size(), cols(), "LinearOperator::apply");
    return {entries * f.coords};
  }

  DualVector adjoint(const DualVector &d) const {
    require_dim(d.action.size(), rows(), "LinearOperator::adjoint");
    return {entries.transpose() * d.action};
  }

  bool is_zero() const { return entries.cwiseAbs().maxCoeff() == 0.0; }
};

class FrameFamily {
public:
  FrameFamily(SipSpace space, cmat synthesis, double coeff_exponent)
      : space_(std::move(space)), synthesis_(std::move(synthesis)),
        p_d_(coeff_exponent) {
    require(synthesis_.cols() >= 1, "FrameFamily: the family must not be empty");
    require_dim(synthesis_.rows(), space_.dim(), "FrameFamily member");
    require(std::isfinite(p_d_) && p_d_ > 1.0,
            "FrameFamily: coefficient exponent must satisfy 1 < p_d < infinity");
    q_d_ = conjugate_exponent(p_d_);
  }

  FrameFamily(SipSpace space, const std::vector<Vector> &members,
              double coeff_exponent)
      : FrameFamily(space, stack(space, members), coeff_exponent) {}

  const SipSpace &space() const { return space_; }
  // n x J, column j is f_j
  const cmat &synthesis() const { return synthesis_; }
  Index size() const { return synthesis_.cols(); }
  Index dim() const { return space_.dim(); }
  double coeff_exponent() const { return p_d_; }
  double coeff_dual_exponent() const { return q_d_; }

  Vector member(Index j) const { return {synthesis_.col(j)}; }

  // {K f_j}
  FrameFamily transformed(const LinearOperator &K) const {
    require_dim(K.cols(), dim(), "FrameFamily::transformed");
    require_dim(K.rows(), dim(), "FrameFamily::transformed");
    return FrameFamily(space_, K.entries * synthesis_, p_d_);
  }

private:
  static cmat stack(const SipSpace &space, const std::vector<Vector> &members) {
    require(!members.empty(), "FrameFamily: the family must not be empty");
    cmat out(space.dim(), static_cast<Index>(members.size()));
    for (std::size_t j = 0; j < members.size(); ++j) {
      require_dim(members[j].coords.size(), space.dim(), "FrameFamily member");
      out.col(static_cast<Index>(j)) = members[j].coords;
    }
    return out;
  }

  SipSpace space_;
  cmat synthesis_;
  double p_d_;
  double q_d_;
};

inline double coeff_norm(const FrameFamily &fam, const CoeffVector &c) {
  return lp_norm(c.values, fam.coeff_exponent());
}

inline double coeff_dual_norm(const FrameFamily &fam, const CoeffDualVector &c) {
  return lp_norm(c.values, fam.coeff_dual_exponent());
}

inline CoeffDualVector analyze(const FrameFamily &fam, const DualVector &fstar) {
  require_dim(fstar.action.size(), fam.dim(), "analyze");
  return {fam.synthesis().transpose() * fstar.action};
}

inline Vector synthesize(const FrameFamily &fam, const CoeffVector &c) {
  require_dim(c.values.size(), fam.size(), "synthesize");
  return {fam.synthesis() * c.values};
}

inline CoeffVector coeff_duality_map(const FrameFamily &fam,
                                     const CoeffDualVector &c) {
  require_dim(c.values.size(), fam.size(), "coeff_duality_map");
  const double q = fam.coeff_dual_exponent();
  const double n = lp_norm(c.values, q);
  CoeffVector out{cvec::Zero(c.values.size())};
  if (n == 0.0) {
    return out;
  }
  for (Index j = 0; j < c.values.size(); ++j) {
    out.values[j] = detail::signed_power(c.values[j] / n, q) * n;
  }
  return out;
}

inline Vector frame_operator(const FrameFamily &fam, const DualVector &fstar) {
  return synthesize(fam, coeff_duality_map(fam, analyze(fam, fstar)));
}

struct AdjointCheck {
  bool passed = false;
  double max_residual = 0.0;
};

using AnalysisMap = std::function<CoeffDualVector(const DualVector &)>;

// Checks (U* f*)(c) = f*(U c) = (T f*)(c) on random pairs, with `analysis`
// standing in for T.
inline AdjointCheck adjoint_check(const FrameFamily &fam, const AnalysisMap &analysis,
                                  std::uint64_t seed = 7, int trials = 32,
                                  double tol = 1e-9) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto draw = [&](Index k) {
    cvec z(k);
    for (Index i = 0; i < k; ++i) {
      z[i] = cplx(normal(rng), normal(rng));
    }
    return z;
  };
  AdjointCheck out;
  for (int t = 0; t < trials; ++t) {
    const DualVector fstar{draw(fam.dim())};
    const CoeffVector c{draw(fam.size())};
    const cplx lhs = apply(fstar, synthesize(fam, c));
    const cplx rhs = (analysis(fstar).values.array() * c.values.array()).sum();
    const double scale = std::max(
        1e-300, fstar.action.norm() * fam.synthesis().norm() * c.values.norm());
    out.max_residual = std::max(out.max_residual, std::abs(lhs - rhs) / scale);
  }
  out.passed = out.max_residual <= tol;
  return out;
}

inline AdjointCheck adjoint_check(const FrameFamily &fam, std::uint64_t seed = 7,
                                  int trials = 32, double tol = 1e-9) {
  return adjoint_check(
      fam, [&fam](const DualVector &d) { return analyze(fam, d); }, seed, trials, tol);
}

// sup ||T f*|| / ||f*||  over  f* != 0
inline HomogeneousRatio analysis_ratio(const FrameFamily &fam) {
  HomogeneousRatio r;
  r.numerator.push_back({fam.synthesis().transpose(), fam.coeff_dual_exponent(), {}, 1.0});
  r.denominator = {cmat::Identity(fam.dim(), fam.dim()), fam.space().q(),
                   fam.space().dual_weights(), 1.0};
  return r;
}

// sup ||U c|| / ||c||  over  c != 0
inline HomogeneousRatio synthesis_ratio(const FrameFamily &fam) {
  HomogeneousRatio r;
  r.numerator.push_back({fam.synthesis(), fam.space().p(), fam.space().weights(), 1.0});
  r.denominator = {cmat::Identity(fam.size(), fam.size()), fam.coeff_exponent(), {}, 1.0};
  return r;
}

// Starts that tend to sit near the extremes of l^p ratios: coordinate
// vectors and the Euclidean singular vectors of `map`.
inline std::vector<rvec> structured_starts(const cmat &map) {
  std::vector<rvec> starts;
  const Index n = map.cols();
  for (Index i = 0; i < n; ++i) {
    starts.push_back(pack(cvec::Unit(n, i)));
  }
  const linalg::Svd s = linalg::svd(map);
  for (Index i = 0; i < s.V.cols(); ++i) {
    starts.push_back(pack(cvec(s.V.col(i))));
  }
  return starts;
}

struct BesselBound {
  double analysis = 0.0;  // sup ||T f*|| / ||f*||
  double synthesis = 0.0; // sup ||U c|| / ||c||
  DualVector witness;
  CoeffVector synthesis_witness;
  bool converged = false;

  double value() const { return std::max(analysis, synthesis); }
  double disagreement() const {
    const double v = value();
    return v == 0.0 ? 0.0 : std::abs(analysis - synthesis) / v;
  }
};

// Upper X_d*-frame bound: the analysis norm, computed alongside the
// synthesis norm (the two coincide since U* = T).
inline BesselBound bessel_bound(const FrameFamily &fam, const OptimizerOptions &opts = {}) {
  BesselBound out;
  if (fam.synthesis().cwiseAbs().maxCoeff() == 0.0) {
    out.witness = {cvec::Unit(fam.dim(), 0)};
    out.synthesis_witness = {cvec::Unit(fam.size(), 0)};
    out.converged = true;
    return out;
  }
  const MultiStartResult a =
      multistart_maximize(analysis_ratio(fam).objective(1.0), 2 * fam.dim(), opts,
                          structured_starts(fam.synthesis().transpose()));
  OptimizerOptions synth_opts = opts;
  synth_opts.seed = split_seed(opts.seed, 0x5157);
  const MultiStartResult s =
      multistart_maximize(synthesis_ratio(fam).objective(1.0), 2 * fam.size(),
                          synth_opts, structured_starts(fam.synthesis()));
  out.analysis = a.value;
  out.synthesis = s.value;
  out.witness = {unpack(a.x)};
  out.witness.action /= dual_norm(fam.space(), out.witness);
  out.synthesis_witness = {unpack(s.x)};
  out.converged = a.converged && s.converged;
  return out;
}

} // namespace sipframe

#endif // SIPFRAME_FRAME_OPS_HPP_
