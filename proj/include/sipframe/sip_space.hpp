#ifndef SIPFRAME_SIP_SPACE_HPP_
#define SIPFRAME_SIP_SPACE_HPP_

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "sipframe/config.hpp"

// Finite-dimensional weighted l^p spaces with their compatible
// semi-inner product
//
//   [g, h] = ||h||^{2-p} sum_j w_j g_j conj(h_j) |h_j|^{p-2},
//
// the duality map f -> f* (g -> [g, f]) and its inverse.  Functionals are
// stored by their action coefficients: d acts by d(g) = sum_j d_j g_j, with
// no conjugation, so that the dual norm is a weighted l^q norm.

namespace sipframe {

namespace detail {

// conj(z) |z|^{r-2}, extended by continuity to 0 at z = 0 (needs r > 1).
inline cplx signed_power(cplx z, double r) {
  const double a = std::abs(z);
  if (a == 0.0) {
    return cplx(0.0, 0.0);
  }
  return std::conj(z) * std::pow(a, r - 2.0);
}

} // namespace detail

// (sum_j w_j |x_j|^r)^{1/r}.  An empty weight vector means unit weights.
inline double weighted_lp_norm(const cvec &x, double r, const rvec &w = {}) {
  // Scale by the largest modulus so that large exponents do not overflow.
  double scale = 0.0;
  for (Index j = 0; j < x.size(); ++j) {
    scale = std::max(scale, std::abs(x[j]));
  }
  if (scale == 0.0) {
    return 0.0;
  }
  double sum = 0.0;
  for (Index j = 0; j < x.size(); ++j) {
    const double wj = w.size() == 0 ? 1.0 : w[j];
    sum += wj * std::pow(std::abs(x[j]) / scale, r);
  }
  return scale * std::pow(sum, 1.0 / r);
}

inline double lp_norm(const cvec &x, double r) {
  return weighted_lp_norm(x, r);
}

inline double conjugate_exponent(double p) { return p / (p - 1.0); }

class SipSpace {
public:
  SipSpace(Index dim, double exponent)
      : SipSpace(exponent, rvec::Ones(dim)) {}

  SipSpace(double exponent, rvec weights)
      : p_(exponent), weights_(std::move(weights)) {
    require(weights_.size() >= 1, "SipSpace: dimension must be at least 1");
    require(std::isfinite(p_) && p_ > 1.0,
            "SipSpace: exponent must satisfy 1 < p < infinity");
    for (Index j = 0; j < weights_.size(); ++j) {
      require(std::isfinite(weights_[j]) && weights_[j] > 0.0,
              "SipSpace: weights must be strictly positive");
    }
    q_ = conjugate_exponent(p_);
    require(std::abs(1.0 / p_ + 1.0 / q_ - 1.0) <= Tolerances{}.conjugate_exponent,
            "SipSpace: exponent too close to 1");
    dual_weights_.resize(weights_.size());
    for (Index j = 0; j < weights_.size(); ++j) {
      dual_weights_[j] = std::pow(weights_[j], 1.0 - q_);
    }
    unit_ = (weights_.array() == 1.0).all();
  }

  Index dim() const { return weights_.size(); }
  double p() const { return p_; }
  double q() const { return q_; }
  const rvec &weights() const { return weights_; }
  // w_j^{1-q}: the weights of the dual l^q norm.
  const rvec &dual_weights() const { return dual_weights_; }
  bool unit_weights() const { return unit_; }

  bool operator==(const SipSpace &other) const {
    return p_ == other.p_ && weights_ == other.weights_;
  }

private:
  double p_;
  double q_;
  rvec weights_;
  rvec dual_weights_;
  bool unit_ = true;
};

// An element of X, by coordinates.
struct Vector {
  cvec coords;
};

// A functional on X, by action coefficients.
struct DualVector {
  cvec action;
};

inline Vector unit_vector(const SipSpace &space, Index j) {
  return Vector{cvec::Unit(space.dim(), j)};
}

inline double norm(const SipSpace &space, const Vector &f) {
  require_dim(f.coords.size(), space.dim(), "norm");
  return weighted_lp_norm(f.coords, space.p(), space.weights());
}

inline double dual_norm(const SipSpace &space, const DualVector &d) {
  require_dim(d.action.size(), space.dim(), "dual_norm");
  return weighted_lp_norm(d.action, space.q(), space.dual_weights());
}

// d(g) = sum_j d_j g_j
inline cplx apply(const DualVector &d, const Vector &g) {
  require_dim(g.coords.size(), d.action.size(), "apply");
  return (d.action.array() * g.coords.array()).sum();
}

inline DualVector dualize(const SipSpace &space, const Vector &f) {
  require_dim(f.coords.size(), space.dim(), "dualize");
  const double n = norm(space, f);
  DualVector d{cvec::Zero(space.dim())};
  if (n == 0.0) {
    return d;
  }
  const double p = space.p();
  // w_j conj(f_j) |f_j/n|^{p-2}, computed on the normalized vector.
  for (Index j = 0; j < space.dim(); ++j) {
    d.action[j] = space.weights()[j] * detail::signed_power(f.coords[j] / n, p) * n;
  }
  return d;
}

inline Vector undualize(const SipSpace &space, const DualVector &d) {
  require_dim(d.action.size(), space.dim(), "undualize");
  const double n = dual_norm(space, d);
  Vector f{cvec::Zero(space.dim())};
  if (n == 0.0) {
    return f;
  }
  const double q = space.q();
  for (Index j = 0; j < space.dim(); ++j) {
    const cplx dj = d.action[j];
    const double a = std::abs(dj);
    if (a == 0.0) {
      continue;
    }
    // (conj(d_j)/|d_j|) (|d_j|/w_j)^{q-1} n^{2-q}, written in normalized form.
    const double mag = std::pow(a / (n * space.weights()[j]), q - 1.0) * n;
    f.coords[j] = std::conj(dj) / a * mag;
  }
  return f;
}

inline cplx sip(const SipSpace &space, const Vector &g, const Vector &h) {
  require_dim(g.coords.size(), space.dim(), "sip");
  require_dim(h.coords.size(), space.dim(), "sip");
  return apply(dualize(space, h), g);
}

struct AxiomCheck {
  std::string name;
  double worst = 0.0; // largest scaled residual over the draws
  double tolerance = 0.0;
  bool passed = true;
};

// Semi-inner-product axioms and duality-map identities on random draws from
// the space. Coordinates are zeroed with probability 1/5 so that the
// extension by continuity at 0 is exercised.
inline std::vector<AxiomCheck> check_axioms(const SipSpace &space, int draws,
                                            std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Index n = space.dim();
  auto draw = [&]() {
    cvec z(n);
    for (Index i = 0; i < n; ++i) {
      const cplx c(normal(rng), normal(rng));
      z[i] = unit(rng) < 0.2 ? cplx(0.0, 0.0) : c;
    }
    return z;
  };
  std::vector<AxiomCheck> out = {
      {"cauchy_schwarz", 0.0, 1e-10},       {"norm_compatibility", 0.0, 1e-10},
      {"first_slot_linearity", 0.0, 1e-9},  {"second_slot_homogeneity", 0.0, 1e-9},
      {"dualize_roundtrip", 0.0, 1e-10},    {"undualize_roundtrip", 0.0, 1e-10},
      {"duality_isometry", 0.0, 1e-10},
  };
  auto record = [&](std::size_t k, double r) {
    out[k].worst = std::max(out[k].worst, std::isnan(r) ? 1e300 : r);
  };
  for (int t = 0; t < draws; ++t) {
    const Vector f{draw()}, g{draw()}, h{draw()};
    const cplx a(normal(rng), normal(rng));
    const cplx lambda(normal(rng), normal(rng));
    const double nf = norm(space, f), ng = norm(space, g), nh = norm(space, h);
    const cplx sgh = sip(space, g, h);
    record(0, (std::abs(sgh) - ng * nh) / std::max(ng * nh, 1e-300));
    record(1, std::abs(sip(space, h, h) - nh * nh) / std::max(nh * nh, 1e-300));
    const cplx lin = sip(space, {a * f.coords + g.coords}, h);
    record(2, std::abs(lin - a * sip(space, f, h) - sgh) /
                  std::max((std::abs(a) * nf + ng) * nh, 1e-300));
    const cplx hom = sip(space, g, {lambda * h.coords});
    record(3, std::abs(hom - std::conj(lambda) * sgh) /
                  std::max(std::abs(lambda) * ng * nh, 1e-300));
    const DualVector d = dualize(space, f);
    record(4, (undualize(space, d).coords - f.coords).norm() /
                  std::max(f.coords.norm(), 1e-300));
    const DualVector e{draw()};
    record(5, (dualize(space, undualize(space, e)).action - e.action).norm() /
                  std::max(e.action.norm(), 1e-300));
    record(6, std::abs(dual_norm(space, d) - nf) / std::max(nf, 1e-300));
  }
  for (AxiomCheck &c : out) {
    c.passed = c.worst <= c.tolerance;
  }
  return out;
}

} // namespace sipframe

#endif // SIPFRAME_SIP_SPACE_HPP_
