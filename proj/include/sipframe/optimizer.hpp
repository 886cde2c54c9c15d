#ifndef SIPFRAME_OPTIMIZER_HPP_
#define SIPFRAME_OPTIMIZER_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <thread>
#include <vector>

#include <Eigen/QR>

#include "sipframe/config.hpp"
#include "sipframe/sip_space.hpp"

// Multi-start optimization of scale-invariant objectives over the Euclidean
// unit sphere of R^m.  Complex vectors d in C^n enter through the real
// parametrization x = [Re d; Im d], so m = 2n.
//
// The local method is a BFGS iteration on the sphere (tangent-projected
// directions, Armijo backtracking, retraction by normalization).  When the
// gradient is unavailable or the line search stalls, the search switches to
// a Nelder-Mead polytope in a tangent chart at the current point.

namespace sipframe {

inline rvec pack(const cvec &z) {
  rvec x(2 * z.size());
  x.head(z.size()) = z.real();
  x.tail(z.size()) = z.imag();
  return x;
}

inline cvec unpack(const rvec &x) {
  const Index n = x.size() / 2;
  cvec z(n);
  for (Index i = 0; i < n; ++i) {
    z[i] = cplx(x[i], x[n + i]);
  }
  return z;
}

// Value at x; when grad is non-null it receives the gradient, or is resized
// to 0 when the objective is not differentiable at x.
using Objective = std::function<double(const rvec &x, rvec *grad)>;

// One term  coefficient * || map d ||_{exponent, weights}.
struct NormTerm {
  cmat map;
  double exponent = 2.0;
  rvec weights; // empty: unit weights
  double coefficient = 1.0;

  // Norm value and, optionally, its gradient with respect to pack(d).
  // Returns false for the gradient when the norm vanishes.
  double evaluate(const cvec &d, rvec *grad) const {
    const cvec z = map * d;
    const double h = weighted_lp_norm(z, exponent, weights);
    if (grad != nullptr) {
      if (h == 0.0) {
        grad->resize(0);
      } else {
        cvec s(z.size());
        for (Index k = 0; k < z.size(); ++k) {
          const double wk = weights.size() == 0 ? 1.0 : weights[k];
          s[k] = wk * detail::signed_power(z[k] / h, exponent);
        }
        const cvec u = map.transpose() * s;
        grad->resize(2 * d.size());
        grad->head(d.size()) = u.real();
        grad->tail(d.size()) = -u.imag();
      }
    }
    return h;
  }
};

// (sum_k numerator_k) / denominator, homogeneous of degree 0 in d.
struct HomogeneousRatio {
  std::vector<NormTerm> numerator;
  NormTerm denominator;

  double value(const cvec &d) const { return evaluate(d, nullptr); }

  double evaluate(const cvec &d, rvec *grad) const {
    const Index m = 2 * d.size();
    double num = 0.0;
    rvec num_grad = rvec::Zero(m);
    bool smooth = true;
    rvec g;
    for (const NormTerm &term : numerator) {
      const double h = term.evaluate(d, grad != nullptr ? &g : nullptr);
      num += term.coefficient * h;
      if (grad != nullptr) {
        if (g.size() == 0) {
          smooth = smooth && term.coefficient == 0.0;
        } else {
          num_grad += term.coefficient * g;
        }
      }
    }
    rvec den_grad;
    const double den =
        denominator.evaluate(d, grad != nullptr ? &den_grad : nullptr);
    if (den == 0.0) {
      if (grad != nullptr) {
        grad->resize(0);
      }
      if (num == 0.0) {
        return std::numeric_limits<double>::quiet_NaN();
      }
      return num > 0.0 ? std::numeric_limits<double>::infinity()
                       : -std::numeric_limits<double>::infinity();
    }
    const double r = num / den;
    if (grad != nullptr) {
      if (!smooth || den_grad.size() == 0) {
        grad->resize(0);
      } else {
        *grad = (num_grad - r * den_grad) / den;
      }
    }
    return r;
  }

  // Objective for the real parametrization; sense = +1 maximizes the ratio,
  // -1 minimizes it.
  Objective objective(double sense) const {
    HomogeneousRatio self = *this;
    return [self, sense](const rvec &x, rvec *grad) {
      const double v = self.evaluate(unpack(x), grad);
      if (grad != nullptr && grad->size() > 0) {
        *grad *= sense;
      }
      return sense * v;
    };
  }
};

struct OptimizerOptions {
  int restarts = 64;
  std::uint64_t seed = 0;
  int threads = 1;
  double change_tol = 1e-10;
  int max_iterations = 1000;
  // Evaluation budget of one polytope search; 0 picks 400 * m.
  int polytope_evaluations = 0;
  bool derivative_free = false;
};

struct LocalResult {
  rvec x;
  double value = -std::numeric_limits<double>::infinity();
  bool converged = false;
  int iterations = 0;
  bool used_polytope = false;
};

struct MultiStartResult {
  rvec x;
  double value = -std::numeric_limits<double>::infinity();
  bool converged = false;
  int restarts_used = 0;
  int polytope_runs = 0;
  // final value of every start, in start order
  std::vector<double> values;
};

namespace detail {

inline double finite_or_worst(double v) {
  return std::isnan(v) ? -std::numeric_limits<double>::infinity() : v;
}

inline bool small_change(double before, double after, double tol) {
  return std::abs(after - before) <= tol * std::max(std::abs(after), 1e-300);
}

// Maximize f on the sphere near x0 with a Nelder-Mead polytope in the
// tangent chart y -> normalize(x0 + B y).
inline LocalResult polytope_search(const Objective &f, const rvec &x0,
                                   const OptimizerOptions &opts,
                                   double initial_size = 0.1) {
  const Index m = x0.size();
  LocalResult out;
  out.used_polytope = true;
  if (m == 1) {
    out.x = x0 / x0.norm();
    out.value = finite_or_worst(f(out.x, nullptr));
    out.converged = true;
    return out;
  }
  const rvec center = x0 / x0.norm();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(center);
  const Eigen::MatrixXd Q = qr.householderQ();
  const Eigen::MatrixXd B = Q.rightCols(m - 1);
  const Index k = m - 1;
  auto point = [&](const rvec &y) {
    rvec x = center + B * y;
    return rvec(x / x.norm());
  };
  auto eval = [&](const rvec &y) { return finite_or_worst(f(point(y), nullptr)); };

  std::vector<rvec> simplex(k + 1, rvec::Zero(k));
  std::vector<double> values(k + 1);
  for (Index i = 0; i < k; ++i) {
    simplex[i + 1][i] = initial_size;
  }
  for (Index i = 0; i <= k; ++i) {
    values[i] = eval(simplex[i]);
  }
  const int budget = opts.polytope_evaluations > 0
                         ? opts.polytope_evaluations
                         : static_cast<int>(400 * m);
  int evaluations = static_cast<int>(k + 1);
  std::vector<Index> order(k + 1);
  while (evaluations < budget) {
    for (Index i = 0; i <= k; ++i) {
      order[i] = i;
    }
    // descending: best first
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return values[a] > values[b]; });
    const double best = values[order.front()];
    const double worst = values[order.back()];
    double diameter = 0.0;
    for (Index i = 1; i <= k; ++i) {
      diameter = std::max(diameter, (simplex[order[i]] - simplex[order[0]]).norm());
    }
    if (std::isfinite(worst) &&
        std::abs(best - worst) <= opts.change_tol * std::max(std::abs(best), 1e-300) &&
        diameter < 1e-9) {
      out.converged = true;
      break;
    }
    if (diameter < 1e-14) {
      out.converged = true;
      break;
    }
    rvec centroid = rvec::Zero(k);
    for (Index i = 0; i < k; ++i) {
      centroid += simplex[order[i]];
    }
    centroid /= static_cast<double>(k);
    const Index w = order.back();
    const rvec reflected = centroid + (centroid - simplex[w]);
    const double fr = eval(reflected);
    ++evaluations;
    if (fr > best) {
      const rvec expanded = centroid + 2.0 * (centroid - simplex[w]);
      const double fe = eval(expanded);
      ++evaluations;
      if (fe > fr) {
        simplex[w] = expanded;
        values[w] = fe;
      } else {
        simplex[w] = reflected;
        values[w] = fr;
      }
      continue;
    }
    if (fr > values[order[k - 1]]) {
      simplex[w] = reflected;
      values[w] = fr;
      continue;
    }
    const bool outside = fr > values[w];
    const rvec contracted = outside ? rvec(centroid + 0.5 * (reflected - centroid))
                                    : rvec(centroid + 0.5 * (simplex[w] - centroid));
    const double fc = eval(contracted);
    ++evaluations;
    if ((outside && fc >= fr) || (!outside && fc > values[w])) {
      simplex[w] = contracted;
      values[w] = fc;
      continue;
    }
    const Index b = order.front();
    for (Index i = 0; i <= k; ++i) {
      if (i == b) {
        continue;
      }
      simplex[i] = simplex[b] + 0.5 * (simplex[i] - simplex[b]);
      values[i] = eval(simplex[i]);
      ++evaluations;
    }
  }
  Index best = 0;
  for (Index i = 1; i <= k; ++i) {
    if (values[i] > values[best]) {
      best = i;
    }
  }
  out.x = point(simplex[best]);
  out.value = values[best];
  out.iterations = evaluations;
  return out;
}

inline rvec tangent(const rvec &g, const rvec &x) { return g - g.dot(x) * x; }

// BFGS ascent on the sphere; returns with used_polytope = false unless the
// gradient became unavailable or the line search failed.
inline LocalResult bfgs_search(const Objective &f, const rvec &x0,
                               const OptimizerOptions &opts) {
  const Index m = x0.size();
  LocalResult out;
  rvec x = x0 / x0.norm();
  rvec g;
  double value = finite_or_worst(f(x, &g));
  out.x = x;
  out.value = value;
  if (!std::isfinite(value)) {
    return out;
  }
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(m, m);
  int quiet = 0;
  for (int it = 0; it < opts.max_iterations; ++it) {
    out.iterations = it + 1;
    if (g.size() == 0) {
      out.used_polytope = true;
      break;
    }
    const rvec gt = tangent(g, x);
    if (gt.norm() <= 1e-15 * std::max(1.0, std::abs(value))) {
      out.converged = true;
      break;
    }
    rvec dir = tangent(H * gt, x);
    if (dir.dot(gt) <= 0.0) {
      H.setIdentity();
      dir = gt;
    }
    double t = std::min(1.0, 1.0 / dir.norm());
    const double slope = dir.dot(gt);
    bool accepted = false;
    rvec x_new;
    rvec g_new;
    double value_new = value;
    for (int k = 0; k < 60; ++k) {
      rvec trial = x + t * dir;
      trial /= trial.norm();
      rvec g_trial;
      const double v = finite_or_worst(f(trial, &g_trial));
      if (std::isfinite(v) && v >= value + 1e-4 * t * slope) {
        x_new = trial;
        g_new = g_trial;
        value_new = v;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      // Either converged to rounding level or stuck at a kink.
      if (gt.norm() <= 1e-9 * std::max(1.0, std::abs(value))) {
        out.converged = true;
      } else {
        out.used_polytope = true;
      }
      break;
    }
    if (g_new.size() > 0) {
      const rvec s = x_new - x;
      const rvec y = -(tangent(g_new, x_new) - gt);
      const double sy = s.dot(y);
      if (sy > 1e-12 * s.norm() * y.norm()) {
        const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(m, m);
        const double rho = 1.0 / sy;
        H = (I - rho * s * y.transpose()) * H * (I - rho * y * s.transpose()) +
            rho * s * s.transpose();
      }
    }
    const bool small = small_change(value, value_new, opts.change_tol);
    x = x_new;
    g = g_new;
    value = value_new;
    out.x = x;
    out.value = value;
    quiet = small ? quiet + 1 : 0;
    if (quiet >= 2) {
      out.converged = true;
      break;
    }
  }
  return out;
}

} // namespace detail

// Local maximization from x0.
inline LocalResult local_maximize(const Objective &f, const rvec &x0,
                                  const OptimizerOptions &opts) {
  if (opts.derivative_free) {
    LocalResult best = detail::polytope_search(f, x0, opts);
    // Re-seed the polytope until it stops improving.
    for (int round = 0; round < 4; ++round) {
      LocalResult next = detail::polytope_search(f, best.x, opts, 0.02);
      const bool improved = next.value > best.value;
      if (improved) {
        next.iterations += best.iterations;
        best = next;
      }
      if (!improved || detail::small_change(best.value, next.value, opts.change_tol)) {
        break;
      }
    }
    return best;
  }
  LocalResult result = detail::bfgs_search(f, x0, opts);
  if (!result.used_polytope || !std::isfinite(result.value)) {
    return result;
  }
  LocalResult poly = detail::polytope_search(f, result.x, opts);
  if (poly.value > result.value) {
    LocalResult again = detail::bfgs_search(f, poly.x, opts);
    poly.iterations += result.iterations;
    if (again.value > poly.value) {
      again.used_polytope = true;
      again.iterations += poly.iterations;
      return again;
    }
    return poly;
  }
  result.used_polytope = true;
  result.converged = result.converged || poly.converged;
  return result;
}

inline rvec random_start(Index m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  rvec x(m);
  for (Index i = 0; i < m; ++i) {
    x[i] = normal(rng);
  }
  return x;
}

// Multi-start maximization: the given starts first, then opts.restarts
// seeded random starts.  The reduction walks starts in index order and keeps
// the first strictly best value, so results do not depend on opts.threads.
inline MultiStartResult multistart_maximize(const Objective &f, Index m,
                                            const OptimizerOptions &opts,
                                            const std::vector<rvec> &starts = {}) {
  std::vector<rvec> all;
  for (const rvec &s : starts) {
    if (s.size() == m && s.norm() > 0.0 && s.allFinite()) {
      all.push_back(s);
    }
  }
  for (int r = 0; r < opts.restarts; ++r) {
    all.push_back(random_start(m, split_seed(opts.seed, static_cast<std::uint64_t>(r))));
  }
  std::vector<LocalResult> results(all.size());
  const int threads = std::max(1, std::min<int>(opts.threads, static_cast<int>(all.size())));
  if (threads == 1) {
    for (std::size_t i = 0; i < all.size(); ++i) {
      results[i] = local_maximize(f, all[i], opts);
    }
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = static_cast<std::size_t>(w); i < all.size();
             i += static_cast<std::size_t>(threads)) {
          results[i] = local_maximize(f, all[i], opts);
        }
      });
    }
    for (std::thread &t : pool) {
      t.join();
    }
  }
  MultiStartResult out;
  out.restarts_used = static_cast<int>(all.size());
  bool have = false;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const LocalResult &r = results[i];
    out.values.push_back(r.value);
    out.polytope_runs += r.used_polytope ? 1 : 0;
    if (!have || r.value > out.value) {
      out.x = r.x;
      out.value = r.value;
      out.converged = r.converged;
      have = true;
    }
  }
  if (!have) {
    out.x = rvec::Zero(m);
  }
  return out;
}

// Evaluate `visit` on a deterministic grid of the complex unit sphere of C^n
// modulo a global phase: moduli on the positive orthant of S^{n-1} (angles in
// [0, pi/2], `resolution` nodes each, endpoints included) and relative
// phases of coordinates 2..n (`resolution` nodes on [0, 2 pi)).
template <typename Visit>
void visit_sphere_grid(Index n, int resolution, Visit &&visit) {
  require(resolution >= 2, "grid resolution must be at least 2");
  const int angles = static_cast<int>(n - 1);
  const int dims = 2 * angles;
  std::vector<int> idx(static_cast<std::size_t>(dims), 0);
  const double half_pi = std::acos(0.0);
  std::vector<double> cosines(static_cast<std::size_t>(resolution));
  std::vector<double> sines(static_cast<std::size_t>(resolution));
  std::vector<cplx> phases(static_cast<std::size_t>(resolution));
  for (int i = 0; i < resolution; ++i) {
    const double theta = half_pi * i / (resolution - 1);
    cosines[static_cast<std::size_t>(i)] = std::cos(theta);
    sines[static_cast<std::size_t>(i)] = std::sin(theta);
    phases[static_cast<std::size_t>(i)] = std::polar(1.0, 4.0 * half_pi * i / resolution);
  }
  std::vector<double> moduli(static_cast<std::size_t>(n));
  cvec d(n);
  while (true) {
    // hyperspherical moduli
    double s = 1.0;
    for (int a = 0; a < angles; ++a) {
      const auto i = static_cast<std::size_t>(idx[static_cast<std::size_t>(a)]);
      moduli[static_cast<std::size_t>(a)] = s * cosines[i];
      s *= sines[i];
    }
    moduli[static_cast<std::size_t>(n - 1)] = s;
    d[0] = cplx(moduli[0], 0.0);
    for (int a = 0; a < angles; ++a) {
      d[a + 1] = moduli[static_cast<std::size_t>(a + 1)] *
                 phases[static_cast<std::size_t>(idx[static_cast<std::size_t>(angles + a)])];
    }
    visit(static_cast<const cvec &>(d));
    int k = 0;
    while (k < dims) {
      if (++idx[static_cast<std::size_t>(k)] < resolution) {
        break;
      }
      idx[static_cast<std::size_t>(k)] = 0;
      ++k;
    }
    if (k == dims) {
      break;
    }
  }
}

} // namespace sipframe

#endif // SIPFRAME_OPTIMIZER_HPP_
