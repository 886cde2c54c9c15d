#ifndef SIPFRAME_RKBS_HPP_
#define SIPFRAME_RKBS_HPP_

#include <string>
#include <utility>
#include <vector>

#include "sipframe/atomic_recon.hpp"

// Discrete s.i.p. reproducing kernel Banach spaces.
//
// Omega = {t_1..t_m} is finite and X = C^n with an l^p norm; an element a of
// X is the function f(t_i) = (V a)_i. A functional d is the function
// f*(t_i) = sum_k d_k V_{i,k} on Omega. Then
//
//   G(t, .) = undualize(row_t V),      f(t) = [f, G(t, .)],
//   k(t, .) = row_t V^T  (in X),       f*(t) = [k(t, .), f],
//
// and k(s, t) = (V V^T)_{s,t}.

namespace sipframe {

class DiscreteRkbs {
public:
  DiscreteRkbs(std::vector<std::string> points, cmat features, SipSpace coeff_space,
               double sample_exponent)
      : points_(std::move(points)), V_(std::move(features)), space_(std::move(coeff_space)),
        p_d_(sample_exponent) {
    require_dim(static_cast<Index>(points_.size()), V_.rows(), "DiscreteRkbs points");
    require_dim(V_.cols(), space_.dim(), "DiscreteRkbs features");
    for (Index i = 0; i < V_.rows(); ++i) {
      require(!V_.row(i).isZero(0.0),
              "DiscreteRkbs: point '" + points_[static_cast<std::size_t>(i)] +
                  "' has a zero feature row");
    }
    require(linalg::rank(V_) == V_.cols(),
            "DiscreteRkbs: the feature map must have full column rank");
    require(std::isfinite(p_d_) && p_d_ > 1.0,
            "DiscreteRkbs: sample exponent must satisfy 1 < p_d < infinity");
  }

  DiscreteRkbs(std::vector<std::string> points, cmat features, SipSpace coeff_space)
      : DiscreteRkbs(std::move(points), std::move(features), coeff_space, coeff_space.p()) {}

  const std::vector<std::string> &points() const { return points_; }
  const cmat &features() const { return V_; }
  const SipSpace &coeff_space() const { return space_; }
  double sample_exponent() const { return p_d_; }
  Index size() const { return V_.rows(); }

  Index index_of(const std::string &label) const {
    for (std::size_t i = 0; i < points_.size(); ++i) {
      if (points_[i] == label) {
        return static_cast<Index>(i);
      }
    }
    throw PreconditionError("DiscreteRkbs: unknown point '" + label + "'");
  }

  void check_point(Index t) const {
    require(t >= 0 && t < size(), "DiscreteRkbs: unknown point index " + std::to_string(t));
  }

  // f(t) for f in X
  cplx evaluate(const Vector &f, Index t) const {
    check_point(t);
    require_dim(f.coords.size(), space_.dim(), "DiscreteRkbs::evaluate");
    return V_.row(t) * f.coords;
  }

  // f*(t) for f* in X*
  cplx evaluate(const DualVector &fstar, Index t) const {
    check_point(t);
    require_dim(fstar.action.size(), space_.dim(), "DiscreteRkbs::evaluate");
    return V_.row(t) * fstar.action;
  }

private:
  std::vector<std::string> points_;
  cmat V_;
  SipSpace space_;
  double p_d_;
};

struct SamplingPattern {
  std::vector<Index> indices;

  void validate(const DiscreteRkbs &space) const {
    require(!indices.empty(), "SamplingPattern: the sampling set must not be empty");
    for (Index t : indices) {
      space.check_point(t);
    }
  }

  static SamplingPattern all(const DiscreteRkbs &space) {
    SamplingPattern z;
    for (Index i = 0; i < space.size(); ++i) {
      z.indices.push_back(i);
    }
    return z;
  }
};

// G(t, .): the element of X whose dual functional is evaluation at t.
inline Vector kernel_G(const DiscreteRkbs &space, Index t) {
  space.check_point(t);
  return undualize(space.coeff_space(), {cvec(space.features().row(t).transpose())});
}

// k(t, .) as an element of X: the element on which every f* evaluates to f*(t).
inline Vector kernel_k_element(const DiscreteRkbs &space, Index t) {
  space.check_point(t);
  return {space.features().row(t).transpose()};
}

// k(s, t): the function k(., t) = G(t, .)* evaluated at s.
inline cplx kernel_k(const DiscreteRkbs &space, Index s, Index t) {
  space.check_point(s);
  return space.evaluate(dualize(space.coeff_space(), kernel_G(space, t)), s);
}

// K_Z = {k(t_j, .)}
inline FrameFamily sampling_family(const DiscreteRkbs &space, const SamplingPattern &Z) {
  Z.validate(space);
  std::vector<Vector> members;
  for (Index t : Z.indices) {
    members.push_back(kernel_k_element(space, t));
  }
  return FrameFamily(space.coeff_space(), members, space.sample_exponent());
}

// I_Z(f*) = {f*(t_j)}, computed as the analysis operator of K_Z.
inline CoeffDualVector sampling_operator(const DiscreteRkbs &space, const SamplingPattern &Z,
                                         const DualVector &fstar) {
  return analyze(sampling_family(space, Z), fstar);
}

inline CertificationReport sampled_frame_certify(const DiscreteRkbs &space,
                                                 const SamplingPattern &Z,
                                                 const LinearOperator &K,
                                                 const CertifyOptions &opts = {}) {
  return certify_k_frame(sampling_family(space, Z), K, opts);
}

// sum_j f*(t_j) g_j* with {g_j*} the dual family of K_Z; equals K* f*.
// Throws FactorizationError when K* does not vanish on null(I_Z).
inline DualVector reconstruct_from_samples(const DiscreteRkbs &space, const SamplingPattern &Z,
                                           const LinearOperator &K,
                                           const CoeffDualVector &samples,
                                           const CertifyOptions &opts = {}) {
  const FrameFamily fam = sampling_family(space, Z);
  require_dim(samples.values.size(), fam.size(), "reconstruct_from_samples");
  const DualFamily dual = construct_dual_family(fam, K, opts, false);
  return {dual.Q.entries * samples.values};
}

} // namespace sipframe

#endif // SIPFRAME_RKBS_HPP_
