#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace sipframe;
using namespace sipframe::testing;

namespace {

double lp_objective(const cvec &a, double p) {
  double s = 0.0;
  for (Index j = 0; j < a.size(); ++j) {
    s += std::pow(std::abs(a[j]), p);
  }
  return s;
}

} // namespace

TEST(MinNormCoeffs, L32Projector) {
  const FrameFamily fam = l32_family();
  cvec x(3);
  x << cplx(0.7, -0.2), -1.3, cplx(0.5, 2.0);
  const CoeffVector a = min_norm_coeffs(fam, l32_projector(), {x});
  EXPECT_NEAR(std::abs(a.values[0] - x[0]), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(a.values[1] - x[1]), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(a.values[2]), 0.0, 1e-12);
  // dense search over the free coordinate a_3
  const double best = lp_objective(a.values, 1.5);
  for (int i = -40; i <= 40; ++i) {
    for (int k = -40; k <= 40; ++k) {
      cvec b = a.values;
      b[2] = cplx(0.05 * i, 0.05 * k);
      EXPECT_GE(lp_objective(b, 1.5), best - 1e-15);
    }
  }
}

TEST(MinNormCoeffs, ZeroTarget) {
  EXPECT_EQ(min_norm_coeffs(l32_family(), LinearOperator::zero(3), {cvec::Ones(3)}).values,
            cvec::Zero(3));
}

TEST(MinNormCoeffs, RedundantHilbertPair) {
  const FrameFamily fam(SipSpace(1, 2.0), cmat::Ones(1, 2), 2.0);
  const CoeffVector a = min_norm_coeffs(fam, LinearOperator::identity(1), {cvec::Ones(1)});
  EXPECT_NEAR(std::abs(a.values[0] - 0.5), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(a.values[1] - 0.5), 0.0, 1e-15);
}

TEST(MinNormCoeffs, InfeasibleTarget) {
  EXPECT_THROW(min_norm_coeffs(l32_family(), LinearOperator::identity(3),
                               {cvec::Unit(3, 2)}),
               PreconditionError);
}

TEST(MinNormCoeffs, HilbertCaseIsEuclideanLeastNorm) {
  Rng rng(3);
  for (int t = 0; t < 30; ++t) {
    const Index n = rng.integer(1, 5);
    const cmat F = rng.matrix(n, rng.integer(n, 8));
    const FrameFamily fam(SipSpace(n, rng.uniform(1.3, 3.0)), F, 2.0);
    const cvec f = rng.vector(n);
    const cvec expected = F.completeOrthogonalDecomposition().pseudoInverse() * f;
    const cvec a = min_norm_coeffs(fam, LinearOperator::identity(n), {f}).values;
    EXPECT_LE((a - expected).norm(), 1e-10 * expected.norm());
  }
}

TEST(MinNormCoeffs, OptimalityAndMonotonicity) {
  Rng rng(5);
  for (double pd : {1.25, 1.5, 3.0, 4.0}) {
    for (int t = 0; t < 25; ++t) {
      const Index n = rng.integer(1, 5);
      const Index J = rng.integer(n, 9);
      const cmat F = rng.matrix(n, J);
      const cvec y = F * rng.vector(J);
      const MinNormResult r = min_norm_solve(F, y, pd);
      const cvec &a = r.coeffs.values;
      EXPECT_LE((F * a - y).norm(), 1e-9 * y.norm());
      EXPECT_LE(r.first_order_residual, 1e-6) << "p_d " << pd << " instance " << t;
      for (std::size_t k = 1; k < r.objective_trace.size(); ++k) {
        EXPECT_LE(r.objective_trace[k],
                  r.objective_trace[k - 1] + 1e-12 * r.objective_trace[k - 1]);
      }
      // convexity: no feasible perturbation along null(F) improves the objective
      const cmat N = F.fullPivLu().kernel();
      const double best = lp_objective(a, pd);
      for (int s = 0; s < 50 && N.cols() > 0; ++s) {
        const cvec delta = N * rng.vector(N.cols()) * (0.3 * a.norm() / (1.0 + s));
        EXPECT_GE(lp_objective(a + delta, pd), best * (1.0 - 1e-10));
      }
    }
  }
}

TEST(AtomicConstant, Examples) {
  const CertifyOptions opts = quick_options();
  const AtomicConstant l32 = atomic_constant(l32_family(), l32_projector(), 8, opts);
  EXPECT_NEAR(l32.value, 1.0, 1e-6);
  EXPECT_EQ(atomic_constant(l32_family(), LinearOperator::zero(3), 8, opts).value, 0.0);
  for (double p : {1.5, 2.0, 3.0}) {
    const FrameFamily scaled(SipSpace(1, p), cmat::Constant(1, 1, 2.0), p);
    EXPECT_NEAR(atomic_constant(scaled, LinearOperator::identity(1), 8, opts).value, 0.5,
                1e-9);
  }
  EXPECT_THROW(atomic_constant(l32_family(), LinearOperator::identity(3), 8, opts),
               PreconditionError);
}

TEST(AtomicConstant, IsReciprocalOfLowerBoundAndMajorizesCoefficients) {
  Rng rng(7);
  for (int t = 0; t < 12; ++t) {
    const Index n = rng.integer(1, 3);
    const Index J = rng.integer(n, 5);
    const double pd = t % 3 == 0 ? 2.0 : rng.uniform(1.3, 3.5);
    const FrameFamily fam(SipSpace(rng.uniform(1.3, 3.5), rng.weights(n)), rng.matrix(n, J),
                          pd);
    const LinearOperator K{rng.matrix(n, n)};
    const CertifyOptions opts = quick_options(t);
    const AtomicConstant C = atomic_constant(fam, K, 8, opts);
    const CertificationReport cert = certify_k_frame(fam, K, opts);
    EXPECT_NEAR(C.value * cert.A_est, 1.0, 1e-6) << "instance " << t;
    for (int s = 0; s < 20; ++s) {
      const Vector f{rng.vector(n)};
      const double a = coeff_norm(fam, min_norm_coeffs(fam, K, f));
      EXPECT_LE(a, C.value * norm(fam.space(), f) * (1.0 + 1e-6));
    }
  }
}

TEST(DualFamily, L32Projector) {
  const DualFamily d = construct_dual_family(l32_family(), l32_projector(), quick_options());
  ASSERT_EQ(d.gstars.size(), 3u);
  EXPECT_LE((d.gstars[0].action - cvec::Unit(3, 0)).norm(), 1e-14);
  EXPECT_LE((d.gstars[1].action - cvec::Unit(3, 1)).norm(), 1e-14);
  EXPECT_LE(d.gstars[2].action.norm(), 1e-14);
  EXPECT_NEAR(d.bessel, 1.0, 1e-8);
}

TEST(DualFamily, ZeroOperator) {
  const DualFamily d = construct_dual_family(l32_family(), LinearOperator::zero(3));
  for (const DualVector &g : d.gstars) {
    EXPECT_EQ(g.action, cvec::Zero(3));
  }
}

TEST(DualFamily, CanonicalDualInHilbertSpace) {
  Rng rng(9);
  for (int t = 0; t < 10; ++t) {
    const Index n = rng.integer(1, 5);
    const cmat F = rng.matrix(n, rng.integer(n, 8));
    const SipSpace h(n, 2.0);
    const DualFamily d = construct_dual_family(FrameFamily(h, F, 2.0),
                                               LinearOperator::identity(n), quick_options(t));
    const cmat S = F * F.adjoint();
    for (Index j = 0; j < F.cols(); ++j) {
      const cvec canonical = S.lu().solve(cvec(F.col(j)));
      const cvec expected = dualize(h, {canonical}).action;
      EXPECT_LE((d.gstars[static_cast<std::size_t>(j)].action - expected).norm(),
                1e-9 * std::max(1.0, expected.norm()));
    }
  }
}

TEST(DualFamily, RefusesWithWitness) {
  try {
    construct_dual_family(l32_family(), LinearOperator::identity(3));
    FAIL() << "expected a factorization error";
  } catch (const FactorizationError &e) {
    EXPECT_NEAR(std::abs(e.witness.action[2]), 1.0, 1e-12);
  }
}

TEST(DualFamily, ReconstructionIdentity) {
  Rng rng(11);
  for (int t = 0; t < 40; ++t) {
    const Index n = rng.integer(1, 6);
    const Index rF = rng.integer(1, n);
    const cmat F = rng.matrix_of_rank(n, rng.integer(rF, 10), rF);
    const cmat K = linalg::range_projector(F) * rng.matrix(n, n);
    const FrameFamily fam(SipSpace(rng.uniform(1.3, 3.0), rng.weights(n)), F,
                          rng.uniform(1.3, 3.0));
    const DualFamily d = construct_dual_family(fam, {K}, quick_options(t, 4));
    for (int s = 0; s < 100; ++s) {
      const DualVector fs{rng.vector(n)};
      const cvec t_f = analyze(fam, fs).values;
      cvec sum = cvec::Zero(n);
      for (Index j = 0; j < fam.size(); ++j) {
        sum += t_f[j] * d.gstars[static_cast<std::size_t>(j)].action;
      }
      const cvec expected = K.transpose() * fs.action;
      EXPECT_LE((sum - expected).norm(), 1e-7 * std::max(1.0, K.norm()) * fs.action.norm());
    }
  }
}

TEST(LocalAtoms, CoordinateFunctionals) {
  const SipSpace s(3, 1.5);
  const FrameFamily fam(s, l32_family().synthesis(), 1.5);
  const LocalAtomFamily laf{fam, {unit_vector(s, 0), unit_vector(s, 1)},
                            {unit_vector(s, 0), unit_vector(s, 1), {cvec::Zero(3)}}};
  const LocalAtomReport r = check_local_atoms(laf, quick_options());
  EXPECT_TRUE(r.passed);
  EXPECT_NEAR(r.C, 1.0, 1e-6);
  EXPECT_GE(r.restricted_A, 1.0 - 1e-3);
  EXPECT_LE(r.reproduction_error, 1e-12);
}

TEST(LocalAtoms, DoubledFunctionalsFailReproduction) {
  const SipSpace s(3, 1.5);
  const FrameFamily fam(s, l32_family().synthesis(), 1.5);
  // sip(f, 2 e_j) = 2 f_j
  const double c = 2.0;
  const LocalAtomFamily laf{fam, {unit_vector(s, 0), unit_vector(s, 1)},
                            {{c * cvec::Unit(3, 0)}, {c * cvec::Unit(3, 1)}, {cvec::Zero(3)}}};
  const LocalAtomReport r = check_local_atoms(laf, quick_options());
  EXPECT_FALSE(r.reproduction_ok);
  EXPECT_FALSE(r.passed);
  EXPECT_NEAR(r.reproduction_error, 1.0, 1e-9);
  EXPECT_GT(r.reproduction_witness.coords.norm(), 0.0);
}

TEST(LocalAtoms, TrivialSubspaceIsVacuous) {
  const SipSpace s(3, 1.5);
  const FrameFamily fam(s, l32_family().synthesis(), 1.5);
  const LocalAtomFamily laf{fam, {}, {unit_vector(s, 0), unit_vector(s, 1), unit_vector(s, 2)}};
  const LocalAtomReport r = check_local_atoms(laf);
  EXPECT_TRUE(r.vacuous);
  EXPECT_TRUE(r.passed);
}

TEST(LocalAtoms, RandomLocalReproducingPairs) {
  // mu_j(f) = sip(f, g_j) with dualize(g_j) the rows of a left inverse on X0
  Rng rng(13);
  for (int t = 0; t < 6; ++t) {
    const Index n = 3;
    const SipSpace s(rng.uniform(1.4, 3.0), rng.weights(n));
    const cmat F = rng.matrix(n, 4);
    const cmat B = rng.matrix(n, 2);
    const cmat M = linalg::pinv(F) * linalg::range_projector(B);
    std::vector<Vector> mu;
    for (Index j = 0; j < 4; ++j) {
      mu.push_back(undualize(s, {cvec(M.row(j).transpose())}));
    }
    const LocalAtomFamily laf{FrameFamily(s, F, rng.uniform(1.4, 3.0)),
                              {{B.col(0)}, {B.col(1)}}, mu};
    const LocalAtomReport r = check_local_atoms(laf, quick_options(t));
    EXPECT_TRUE(r.reproduction_ok);
    EXPECT_TRUE(r.lower_bound_ok) << r.restricted_A << " vs 1/" << r.C;
  }
}

TEST(Equivalence, L32Projector) {
  const EquivalenceReport r =
      equivalence_harness(l32_family(), l32_projector(), quick_options());
  EXPECT_TRUE(r.atomic && r.k_frame && r.dual_family);
  EXPECT_TRUE(r.agree);
  EXPECT_TRUE(r.range_inclusion);
}

TEST(Equivalence, L32FamilyWithIdentity) {
  const EquivalenceReport r =
      equivalence_harness(l32_family(), LinearOperator::identity(3), quick_options());
  EXPECT_FALSE(r.atomic || r.k_frame || r.dual_family);
  EXPECT_TRUE(r.agree);
  ASSERT_TRUE(r.infeasible_witness.has_value());
  EXPECT_EQ(r.infeasible_witness->coords, cvec::Unit(3, 2));
  EXPECT_NEAR(std::abs(r.certificate.witness_lower.action[2]), 1.0, 1e-12);
}

TEST(Equivalence, RandomInstancesAgree) {
  Rng rng(17);
  for (int t = 0; t < 16; ++t) {
    const Index n = rng.integer(1, 4);
    const bool full = t % 2 == 0;
    const Index rF = full ? n : rng.integer(1, n);
    const cmat F = rng.matrix_of_rank(n, rng.integer(n, 6), rF);
    const FrameFamily fam(SipSpace(rng.uniform(1.3, 3.0), rng.weights(n)), F,
                          t % 4 == 1 ? 2.0 : rng.uniform(1.3, 3.0));
    const LinearOperator K = full ? LinearOperator::identity(n) : LinearOperator{rng.matrix(n, n)};
    const EquivalenceReport r = equivalence_harness(fam, K, quick_options(t, 6), 4);
    EXPECT_TRUE(r.agree) << "instance " << t << ": "
                         << (r.failures.empty() ? "" : r.failures.front());
    if (full) {
      EXPECT_TRUE(r.k_frame);
    }
  }
}
