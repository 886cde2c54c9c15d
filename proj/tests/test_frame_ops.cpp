#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace sipframe;
using namespace sipframe::testing;

TEST(FrameFamily, Validation) {
  SipSpace space(3, 1.5);
  EXPECT_THROW(FrameFamily(space, std::vector<Vector>{}, 1.5), PreconditionError);
  EXPECT_THROW(FrameFamily(space, cmat::Zero(2, 2), 1.5), DimensionMismatch);
  EXPECT_THROW(FrameFamily(space, cmat::Zero(3, 2), 1.0), PreconditionError);
  const FrameFamily fam(space, cmat::Zero(3, 2), 3.0);
  EXPECT_DOUBLE_EQ(fam.coeff_dual_exponent(), 1.5);
}

TEST(Analyze, Examples) {
  const FrameFamily fam = l32_family();
  cvec c(3);
  c << cplx(1.0, 2.0), -0.5, cplx(0.0, 3.0);
  const CoeffDualVector t = analyze(fam, {c});
  cvec expected(3);
  expected << cplx(1.0, 2.0), -0.5, 0.0;
  EXPECT_EQ(t.values, expected);
  EXPECT_EQ(analyze(fam, {cvec::Zero(3)}).values, cvec::Zero(3));

  // Hilbert specialization: T f* = {<f_j, f>}
  Rng rng(2);
  const cmat Q = linalg::range_basis(rng.matrix(4, 4));
  const SipSpace h(4, 2.0);
  const FrameFamily ortho(h, Q, 2.0);
  const Vector f{rng.vector(4)};
  const CoeffDualVector tf = analyze(ortho, dualize(h, f));
  for (Index j = 0; j < 4; ++j) {
    EXPECT_NEAR(std::abs(tf.values[j] - f.coords.dot(Q.col(j))), 0.0, 1e-13);
  }
  EXPECT_THROW(analyze(fam, {cvec::Zero(2)}), DimensionMismatch);
}

TEST(Synthesize, Examples) {
  const FrameFamily fam = l32_family();
  for (Index j = 0; j < 3; ++j) {
    EXPECT_EQ(synthesize(fam, {cvec::Unit(3, j)}).coords, fam.member(j).coords);
  }
  cvec expected(3);
  expected << 1.0, 1.0, 0.0;
  EXPECT_EQ(synthesize(fam, {cvec::Ones(3)}).coords, expected);
  EXPECT_EQ(synthesize(fam, {cvec::Zero(3)}).coords, cvec::Zero(3));
  EXPECT_THROW(synthesize(fam, {cvec::Zero(4)}), DimensionMismatch);
}

TEST(Linearity, AnalyzeAndSynthesize) {
  Rng rng(8);
  for (int t = 0; t < 50; ++t) {
    const Index n = rng.integer(1, 6);
    const Index J = rng.integer(1, 8);
    const FrameFamily fam(SipSpace(n, rng.uniform(1.2, 4.0)), rng.matrix(n, J),
                          rng.uniform(1.2, 4.0));
    const cplx a = rng.complex();
    const cvec d1 = rng.vector(n), d2 = rng.vector(n);
    const cvec lhs = analyze(fam, {a * d1 + d2}).values;
    const cvec rhs = a * analyze(fam, {d1}).values + analyze(fam, {d2}).values;
    EXPECT_LE((lhs - rhs).norm(), 1e-10 * std::max(1.0, rhs.norm()));
    const cvec c1 = rng.vector(J), c2 = rng.vector(J);
    const cvec s1 = synthesize(fam, {a * c1 + c2}).coords;
    const cvec s2 = a * synthesize(fam, {c1}).coords + synthesize(fam, {c2}).coords;
    EXPECT_LE((s1 - s2).norm(), 1e-10 * std::max(1.0, s2.norm()));
  }
}

TEST(AdjointCheck, PassesAndCatchesCorruption) {
  EXPECT_TRUE(adjoint_check(l32_family()).passed);
  Rng rng(4);
  const FrameFamily random(SipSpace(5, 1.7), rng.matrix(5, 7), 2.5);
  const AdjointCheck ok = adjoint_check(random);
  EXPECT_TRUE(ok.passed);
  EXPECT_LE(ok.max_residual, 1e-12);

  // off-by-one rows of T
  const AdjointCheck bad = adjoint_check(random, [&](const DualVector &d) {
    cvec t = analyze(random, d).values;
    cvec shifted(t.size());
    for (Index j = 0; j < t.size(); ++j) {
      shifted[j] = t[(j + 1) % t.size()];
    }
    return CoeffDualVector{shifted};
  });
  EXPECT_FALSE(bad.passed);

  // a conjugated adjoint is also wrong under the bilinear encoding
  const AdjointCheck conj = adjoint_check(random, [&](const DualVector &d) {
    return CoeffDualVector{random.synthesis().adjoint() * d.action};
  });
  EXPECT_FALSE(conj.passed);
}

TEST(CoeffDualityMap, Examples) {
  Rng rng(6);
  const FrameFamily hilbert(SipSpace(2, 2.0), rng.matrix(2, 3), 2.0);
  const cvec c = rng.vector(3);
  EXPECT_LE((coeff_duality_map(hilbert, {c}).values - c.conjugate()).norm(), 1e-14);
  for (Index j = 0; j < 3; ++j) {
    EXPECT_LE((coeff_duality_map(l32_family(), {cvec::Unit(3, j)}).values - cvec::Unit(3, j)).norm(),
              1e-15);
  }

  // q_d = 3: Phi(1,1,0) = (2^{-1/3}, 2^{-1/3}, 0)
  const FrameFamily fam = l32_family();
  cvec c3(3);
  c3 << 1.0, 1.0, 0.0;
  const CoeffVector phi = coeff_duality_map(fam, {c3});
  const double a = std::pow(2.0, -1.0 / 3.0);
  EXPECT_NEAR(std::abs(phi.values[0] - a), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(phi.values[1] - a), 0.0, 1e-15);
  EXPECT_EQ(phi.values[2], cplx(0.0, 0.0));

  for (double qd : {1.3, 1.5, 2.0, 3.0, 5.0}) {
    const FrameFamily f(SipSpace(2, 2.0), rng.matrix(2, 5), qd / (qd - 1.0));
    const cvec x = rng.vector(5, 0.2);
    const CoeffVector y = coeff_duality_map(f, {x});
    const double nx = lp_norm(x, qd);
    EXPECT_LE(rel_err(lp_norm(y.values, f.coeff_exponent()), nx), 1e-10);
    EXPECT_LE(std::abs((y.values.array() * x.array()).sum() - nx * nx), 1e-10 * nx * nx);
  }
}

TEST(FrameOperator, Examples) {
  // classical Hilbert frame operator on l^2(N_3)
  cmat F = cmat::Zero(3, 3);
  F(0, 0) = 1.0;
  F(1, 1) = 1.0;
  const FrameFamily h(SipSpace(3, 2.0), F, 2.0);
  cvec c(3);
  c << cplx(1.0, -1.0), 2.0, 3.0;
  // S f* is the element whose dual is (c1, c2, 0): coordinates (conj c1, conj c2, 0)
  const Vector s = frame_operator(h, {c});
  cvec expected(3);
  expected << cplx(1.0, 1.0), 2.0, 0.0;
  EXPECT_LE((s.coords - expected).norm(), 1e-15);
  EXPECT_EQ(frame_operator(h, {cvec::Zero(3)}).coords, cvec::Zero(3));

  // l^{3/2} example: f*(S f*) = (|c1|^3 + |c2|^3)^{2/3}
  const FrameFamily fam = l32_family();
  c << cplx(0.4, 1.1), -2.0, 0.0;
  const cplx val = apply(DualVector{c}, frame_operator(fam, {c}));
  const double expect =
      std::pow(std::pow(std::abs(c[0]), 3) + std::pow(std::abs(c[1]), 3), 2.0 / 3.0);
  EXPECT_NEAR(val.real(), expect, 1e-12);
  EXPECT_NEAR(val.imag(), 0.0, 1e-12);
}

TEST(FrameOperator, IdentityAndHomogeneity) {
  Rng rng(10);
  for (int t = 0; t < 100; ++t) {
    const Index n = rng.integer(1, 5);
    const Index J = rng.integer(1, 7);
    const FrameFamily fam(SipSpace(rng.uniform(1.2, 4.0), rng.weights(n)), rng.matrix(n, J),
                          rng.uniform(1.2, 4.0));
    const DualVector d{rng.vector(n)};
    const double tn = coeff_dual_norm(fam, analyze(fam, d));
    const cplx val = apply(d, frame_operator(fam, d));
    EXPECT_LE(std::abs(val - tn * tn), 1e-8 * tn * tn);

    const cplx lambda = rng.complex();
    const double lhs = norm(fam.space(), frame_operator(fam, {lambda * d.action}));
    const double rhs = std::abs(lambda) * norm(fam.space(), frame_operator(fam, d));
    EXPECT_LE(rel_err(lhs, rhs), 1e-9);
  }
}

TEST(FrameOperator, GramFormInHilbertCase) {
  Rng rng(12);
  for (int t = 0; t < 30; ++t) {
    const Index n = rng.integer(1, 5);
    const Index J = rng.integer(1, 7);
    const cmat F = rng.matrix(n, J);
    const FrameFamily fam(SipSpace(n, 2.0), F, 2.0);
    const cvec d = rng.vector(n);
    // S f* = sum_j conj(<f_j, f>) f_j with f = conj(d): coordinates F conj(F^T d)
    const cvec gram = F * (F.adjoint() * d.conjugate());
    EXPECT_LE((frame_operator(fam, {d}).coords - gram).norm(), 1e-10 * std::max(1.0, gram.norm()));
  }
}

TEST(BesselBound, Examples) {
  OptimizerOptions opts;
  opts.restarts = 16;
  const BesselBound b = bessel_bound(l32_family(), opts);
  EXPECT_NEAR(b.analysis, 1.0, 1e-9);
  EXPECT_NEAR(b.synthesis, 1.0, 1e-9);

  for (int k : {1, 2, 5}) {
    const FrameFamily copies(SipSpace(2, 2.0), cmat(cvec::Unit(2, 0) * cvec::Ones(k).transpose()),
                             2.0);
    const BesselBound c = bessel_bound(copies, opts);
    EXPECT_NEAR(c.value(), std::sqrt(static_cast<double>(k)), 1e-8);
    EXPECT_LE(c.disagreement(), 1e-8);
  }

  const FrameFamily zeros(SipSpace(3, 1.5), cmat::Zero(3, 4), 2.0);
  EXPECT_EQ(bessel_bound(zeros, opts).value(), 0.0);
}

TEST(BesselBound, AnalysisEqualsSynthesisNorm) {
  Rng rng(21);
  OptimizerOptions opts;
  opts.restarts = 24;
  for (int t = 0; t < 12; ++t) {
    const Index n = rng.integer(1, 4);
    const Index J = rng.integer(1, 5);
    const FrameFamily fam(SipSpace(rng.uniform(1.3, 3.5), rng.weights(n)), rng.matrix(n, J),
                          rng.uniform(1.3, 3.5));
    const BesselBound b = bessel_bound(fam, opts);
    EXPECT_LE(b.disagreement(), 1e-6) << "instance " << t;
  }
}
