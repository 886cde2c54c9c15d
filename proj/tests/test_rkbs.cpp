#include <gtest/gtest.h>

#include <string>

#include "test_support.hpp"

using namespace sipframe;
using namespace sipframe::testing;

namespace {

std::vector<std::string> labels(Index m) {
  std::vector<std::string> out;
  for (Index i = 0; i < m; ++i) {
    out.push_back("t" + std::to_string(i + 1));
  }
  return out;
}

DiscreteRkbs identity_space(Index n, double p) {
  return DiscreteRkbs(labels(n), cmat::Identity(n, n), SipSpace(n, p));
}

DiscreteRkbs random_space(Rng &rng, Index m, Index n, double p, bool weighted = false) {
  const SipSpace s = weighted ? SipSpace(p, rng.weights(n)) : SipSpace(n, p);
  return DiscreteRkbs(labels(m), rng.matrix(m, n), s);
}

// sum_k a_k V_{t,k}, written out
cplx direct_eval(const cmat &V, const cvec &a, Index t) {
  cplx s = 0.0;
  for (Index k = 0; k < a.size(); ++k) {
    s += a[k] * V(t, k);
  }
  return s;
}

// Orthogonal projector onto the coordinates in keep, as a diagonal.
LinearOperator coordinate_projector(Index n, const std::vector<Index> &keep) {
  cvec d = cvec::Zero(n);
  for (Index j : keep) {
    d[j] = 1.0;
  }
  return LinearOperator::diagonal(d);
}

} // namespace

TEST(Rkbs, ConstructionChecks) {
  cmat V = cmat::Identity(3, 3);
  V.row(1).setZero();
  EXPECT_THROW(DiscreteRkbs(labels(3), V, SipSpace(3, 1.5)), PreconditionError);

  cmat low(3, 2);
  low << 1.0, 2.0, 2.0, 4.0, -1.0, -2.0;
  EXPECT_THROW(DiscreteRkbs(labels(3), low, SipSpace(2, 1.5)), PreconditionError);
  EXPECT_THROW(DiscreteRkbs(labels(2), cmat::Identity(3, 3), SipSpace(3, 1.5)),
               DimensionMismatch);
  EXPECT_THROW(DiscreteRkbs(labels(3), cmat::Identity(3, 3), SipSpace(3, 1.5), 1.0),
               PreconditionError);

  const DiscreteRkbs s = identity_space(3, 1.5);
  EXPECT_EQ(s.index_of("t2"), 1);
  EXPECT_THROW(s.index_of("nowhere"), PreconditionError);
  EXPECT_THROW(kernel_G(s, 3), PreconditionError);
  EXPECT_THROW(kernel_k(s, -1, 0), PreconditionError);
  EXPECT_THROW(SamplingPattern{}.validate(s), PreconditionError);
  EXPECT_THROW(sampling_family(s, SamplingPattern{{0, 5}}), PreconditionError);
}

TEST(Rkbs, IdentityFeatureKernels) {
  for (double p : {2.0, 1.5}) {
    const DiscreteRkbs s = identity_space(4, p);
    for (Index i = 0; i < 4; ++i) {
      const Vector G = kernel_G(s, i);
      EXPECT_LE((G.coords - cvec::Unit(4, i)).norm(), 1e-15) << "p=" << p;
      for (Index j = 0; j < 4; ++j) {
        EXPECT_NEAR(std::abs(kernel_k(s, i, j) - cplx(i == j ? 1.0 : 0.0)), 0.0, 1e-15);
      }
    }
  }
}

TEST(Rkbs, ReproducingProperty) {
  Rng rng(301);
  for (double p : {1.5, 2.0, 3.0}) {
    for (bool weighted : {false, true}) {
      const DiscreteRkbs s = random_space(rng, 7, 4, p, weighted);
      for (int trial = 0; trial < 100; ++trial) {
        const Vector f{rng.vector(4)};
        for (Index t = 0; t < s.size(); ++t) {
          const cplx want = direct_eval(s.features(), f.coords, t);
          const cplx got = sip(s.coeff_space(), f, kernel_G(s, t));
          EXPECT_LE(std::abs(got - want), 1e-9 * std::max(std::abs(want), 1.0))
              << "p=" << p << " t=" << t;
        }
      }
    }
  }
}

TEST(Rkbs, DualReproducingProperty) {
  // f*(t) = [k(t, .), f] with f* = dualize(f); the right side goes through the
  // weighted power formula directly, the left through the feature map.
  Rng rng(302);
  for (double p : {1.5, 3.0}) {
    const rvec w = rng.weights(3);
    const DiscreteRkbs s(labels(5), rng.matrix(5, 3), SipSpace(p, w));
    for (int trial = 0; trial < 100; ++trial) {
      const cvec f = rng.vector(3);
      const double nf = oracle_norm(f, p, w);
      const DualVector fstar = dualize(s.coeff_space(), {f});
      for (Index t = 0; t < s.size(); ++t) {
        const cvec kt = s.features().row(t).transpose();
        cplx rhs = 0.0;
        for (Index j = 0; j < 3; ++j) {
          if (std::abs(f[j]) > 0.0) {
            rhs += w[j] * kt[j] * std::conj(f[j]) * std::pow(std::abs(f[j]), p - 2.0);
          }
        }
        rhs *= std::pow(nf, 2.0 - p);
        const cplx lhs = s.evaluate(fstar, t);
        EXPECT_LE(std::abs(lhs - rhs), 1e-9 * std::max(std::abs(rhs), 1.0));
        EXPECT_LE(std::abs(sip(s.coeff_space(), kernel_k_element(s, t), {f}) - rhs),
                  1e-9 * std::max(std::abs(rhs), 1.0));
      }
    }
  }
}

TEST(Rkbs, KernelIsDualOfG) {
  // k(., t) = G(t, .)*: the function k(s, t) over s equals evaluation of the
  // dual of G(t, .), and G(t, .)* acts on every f as evaluation at t.
  Rng rng(303);
  const DiscreteRkbs s = random_space(rng, 6, 3, 1.5, true);
  for (Index t = 0; t < s.size(); ++t) {
    const DualVector Gstar = dualize(s.coeff_space(), kernel_G(s, t));
    const cvec row = s.features().row(t).transpose();
    EXPECT_LE((Gstar.action - row).norm(), 1e-12 * row.norm());
    for (Index u = 0; u < s.size(); ++u) {
      const cplx want = (s.features() * s.features().transpose())(u, t);
      EXPECT_LE(std::abs(kernel_k(s, u, t) - want), 1e-10 * std::max(std::abs(want), 1.0));
    }
  }
}

TEST(Rkbs, SamplingOperator) {
  const DiscreteRkbs id = identity_space(3, 1.5);
  cvec d(3);
  d << cplx(1.0, 2.0), cplx(-0.5, 0.0), cplx(0.0, 3.0);
  const CoeffDualVector all = sampling_operator(id, SamplingPattern::all(id), {d});
  EXPECT_LE((all.values - d).norm(), 1e-15);
  const CoeffDualVector one = sampling_operator(id, SamplingPattern{{2}}, {d});
  ASSERT_EQ(one.values.size(), 1);
  EXPECT_EQ(one.values[0], d[2]);

  Rng rng(304);
  for (int trial = 0; trial < 20; ++trial) {
    const DiscreteRkbs s = random_space(rng, 8, 4, rng.uniform(1.2, 4.0));
    const SamplingPattern Z{{0, 3, 5, 7, 3}};
    const DualVector f1{rng.vector(4)};
    const DualVector f2{rng.vector(4)};
    const cplx a = rng.complex();
    const CoeffDualVector v1 = sampling_operator(s, Z, f1);
    const CoeffDualVector v12 = sampling_operator(s, Z, {f1.action + a * f2.action});
    const CoeffDualVector v2 = sampling_operator(s, Z, f2);
    for (std::size_t j = 0; j < Z.indices.size(); ++j) {
      const Index t = Z.indices[j];
      const cplx direct = direct_eval(s.features(), f1.action, t);
      EXPECT_LE(std::abs(v1.values[static_cast<Index>(j)] - direct),
                1e-10 * std::max(std::abs(direct), 1.0));
    }
    EXPECT_LE((v12.values - v1.values - a * v2.values).norm(),
              1e-10 * std::max(v12.values.norm(), 1.0));
  }
}

TEST(Rkbs, FullCoordinateSamplingIsTight) {
  const DiscreteRkbs s = identity_space(3, 1.5);
  const CertificationReport r =
      sampled_frame_certify(s, SamplingPattern::all(s), LinearOperator::identity(3),
                            quick_options());
  EXPECT_EQ(r.verdict, Verdict::KFrame);
  EXPECT_NEAR(r.A_est, 1.0, 1e-6);
  EXPECT_NEAR(r.B_est, 1.0, 1e-6);
}

TEST(Rkbs, MissingPointRefutes) {
  const DiscreteRkbs s = identity_space(3, 1.5);
  const SamplingPattern Z{{0, 2}};
  const CertificationReport r =
      sampled_frame_certify(s, Z, LinearOperator::identity(3), quick_options());
  EXPECT_EQ(r.verdict, Verdict::Refuted);
  const cvec &w = r.witness_lower.action;
  EXPECT_LE(std::abs(w[0]) + std::abs(w[2]), 1e-12 * w.norm());
  EXPECT_GT(std::abs(w[1]), 0.0);

  const CertificationReport proj =
      sampled_frame_certify(s, Z, coordinate_projector(3, {0, 2}), quick_options());
  EXPECT_EQ(proj.verdict, Verdict::KFrame);
  EXPECT_GT(proj.A_est, 0.5);
}

TEST(Rkbs, FullSamplingIsAlwaysAFrame) {
  Rng rng(305);
  for (int trial = 0; trial < 12; ++trial) {
    const Index n = rng.integer(1, 4);
    const Index m = n + rng.integer(0, 4);
    const double p = rng.uniform(1.2, 4.0);
    const DiscreteRkbs s = random_space(rng, m, n, p, trial % 2 == 1);
    const CertificationReport r =
        sampled_frame_certify(s, SamplingPattern::all(s), LinearOperator::identity(n),
                              quick_options(trial + 1, 8));
    EXPECT_EQ(r.verdict, Verdict::KFrame) << "trial " << trial;
    EXPECT_GT(r.A_est, 0.0);
  }
}

TEST(Rkbs, ExactReconstruction) {
  const DiscreteRkbs id = identity_space(3, 1.5);
  cvec d(3);
  d << cplx(0.3, -1.0), 2.0, cplx(0.0, 0.5);
  const SamplingPattern all = SamplingPattern::all(id);
  const DualVector back = reconstruct_from_samples(id, all, LinearOperator::identity(3),
                                                   sampling_operator(id, all, {d}));
  EXPECT_LE((back.action - d).norm(), 1e-14);

  Rng rng(306);
  for (double p : {1.5, 2.0, 3.0}) {
    for (int trial = 0; trial < 6; ++trial) {
      const Index n = rng.integer(1, 6);
      const Index m = rng.integer(static_cast<int>(n), 10);
      const DiscreteRkbs s = random_space(rng, m, n, p);
      const SamplingPattern Z = SamplingPattern::all(s);
      const DualVector f{rng.vector(n)};
      const DualVector g = reconstruct_from_samples(s, Z, LinearOperator::identity(n),
                                                    sampling_operator(s, Z, f));
      EXPECT_LE((g.action - f.action).norm(), 1e-7 * f.action.norm()) << "p=" << p;
    }
  }
}

TEST(Rkbs, SubsampledReconstructionRecoversProjection) {
  Rng rng(307);
  for (double p : {1.5, 3.0}) {
    // coordinate functionals are sampled at t1, t2; K keeps those two
    cmat V = cmat::Identity(4, 3);
    V.row(3) = rng.matrix(1, 3);
    const DiscreteRkbs s(labels(4), V, SipSpace(3, p));
    const SamplingPattern Z{{0, 1}};
    const LinearOperator K = coordinate_projector(3, {0, 1});
    for (int trial = 0; trial < 20; ++trial) {
      const DualVector f{rng.vector(3)};
      const DualVector g =
          reconstruct_from_samples(s, Z, K, sampling_operator(s, Z, f), quick_options());
      const cvec want = K.adjoint(f).action;
      EXPECT_LE((g.action - want).norm(), 1e-7 * want.norm());
    }
    EXPECT_THROW(reconstruct_from_samples(s, Z, LinearOperator::identity(3),
                                          sampling_operator(s, Z, {rng.vector(3)})),
                 FactorizationError);
  }
}

TEST(Rkbs, CorruptedSampleError) {
  // Zeroing sample j moves the output by exactly f*(t_j) g_j*.
  Rng rng(308);
  const DiscreteRkbs s = random_space(rng, 6, 3, 1.5);
  const SamplingPattern Z = SamplingPattern::all(s);
  const LinearOperator I = LinearOperator::identity(3);
  const DualFamily dual = construct_dual_family(sampling_family(s, Z), I, quick_options());
  for (Index j = 0; j < 6; ++j) {
    const DualVector f{rng.vector(3)};
    CoeffDualVector samples = sampling_operator(s, Z, f);
    const cplx dropped = samples.values[j];
    samples.values[j] = 0.0;
    const DualVector g = reconstruct_from_samples(s, Z, I, samples);
    const double err = dual_norm(s.coeff_space(), {g.action - f.action});
    const double expected = std::abs(dropped) * dual_norm(s.coeff_space(), dual.gstars[j]);
    EXPECT_LE(std::abs(err - expected), 1e-9 * std::max(expected, 1.0));
  }
}

TEST(Rkbs, RankCriticalPatterns) {
  Rng rng(309);
  for (int trial = 0; trial < 6; ++trial) {
    const Index n = rng.integer(2, 4);
    const DiscreteRkbs s = random_space(rng, n + 2, n, rng.uniform(1.3, 3.5));
    SamplingPattern Z;
    for (Index i = 0; i < n; ++i) {
      Z.indices.push_back(i);
    }
    const LinearOperator I = LinearOperator::identity(n);
    EXPECT_EQ(sampled_frame_certify(s, Z, I, quick_options(trial + 3, 8)).verdict,
              Verdict::KFrame);
    for (Index drop = 0; drop < n; ++drop) {
      SamplingPattern Zd;
      for (Index i = 0; i < n; ++i) {
        if (i != drop) {
          Zd.indices.push_back(i);
        }
      }
      EXPECT_EQ(sampled_frame_certify(s, Zd, I, quick_options(trial + 3, 8)).verdict,
                Verdict::Refuted);
    }
  }
}
