#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "risbound/bounds.hpp"
#include "risbound/commands.hpp"

using namespace risbound;

namespace {

ModelParameters scalar(cplx gamma, cplx alpha = -1.0, cplx beta = 1.0) {
  return ModelParameters(alpha, beta, 0.0, CVec::Ones(1), CVec::Ones(1), CMat::Constant(1, 1, gamma));
}

double es_oracle(const ModelParameters& m) { return oracle::exhaustive(m).gain; }

}  // namespace

TEST(NiBound, ScalarExamples) {
  EXPECT_DOUBLE_EQ(ni_bound(scalar(0.0)).value, 1.0);
  EXPECT_DOUBLE_EQ(ni_bound(scalar(0.5)).value, 4.0);
  const BoundReport bad = ni_bound(scalar(1.2));
  EXPECT_FALSE(bad.valid);
  EXPECT_FALSE(bad.reason.empty());
}

TEST(NiBound, DominatesEveryConfiguration) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 20; ++t) {
    const Index n = 2 + static_cast<Index>(t % 9);
    const ModelParameters m = oracle::random_model(n, rng, {0.6366, -0.7712}, -0.8116, 0.8);
    const BoundReport b = ni_bound(m);
    ASSERT_TRUE(b.valid);
    EXPECT_LE(es_oracle(m), b.value);
  }
}

TEST(NioBound, NeverAboveNi) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 20; ++t) {
    const ModelParameters m = oracle::random_model(3 + t % 5, rng, -1.0, 1.0, 0.8);
    const BoundReport ni = ni_bound(m), nio = nio_bound(m);
    ASSERT_TRUE(nio.valid);
    EXPECT_LE(nio.value, ni.value);
    EXPECT_LE(es_oracle(m), nio.value * (1.0 + 1e-12));
    ASSERT_TRUE(nio.gauge.has_value());
    // The reported gauge reproduces the reported value.
    EXPECT_NEAR(ni_bound(apply_gauge(m, *nio.gauge)).value, nio.value, 1e-12 * nio.value);
  }
}

TEST(NioBound, ScalarAndZeroCoupling) {
  EXPECT_LE(nio_bound(scalar(0.5)).value, 4.0);
  std::mt19937_64 rng(3);
  const ModelParameters m(-1.0, 1.0, 0.3, oracle::random_cvec(4, rng), oracle::random_cvec(4, rng), CMat::Zero(4, 4));
  const BoundReport ni = ni_bound(m), nio = nio_bound(m);
  EXPECT_LE(nio.value, ni.value);
  EXPECT_GE(nio.value, es_oracle(m));
}

TEST(NioBound, InvalidWhenIdentityGaugeInfeasible) {
  const BoundReport r = nio_bound(scalar(1.2));
  EXPECT_FALSE(r.valid);
}

TEST(NioBound, Deterministic) {
  std::mt19937_64 rng(4);
  const ModelParameters m = oracle::random_model(6, rng, -1.0, 1.0, 0.9);
  EXPECT_EQ(nio_bound(m).value, nio_bound(m).value);
}

TEST(NioBound, AnalyticGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  const ModelParameters m = oracle::random_model(5, rng, {0.6366, -0.7712}, -0.8116, 0.7);
  detail::NioObjective obj{m, 1e-8};
  RVec z(7);
  z << 0.1, -0.2, 0.3, 0.05, -0.1, 0.2, -0.15;
  const auto e = obj(z, true);
  for (Index j = 0; j < 7; ++j) {
    RVec zp = z, zm = z;
    zp(j) += 1e-6;
    zm(j) -= 1e-6;
    const double fd = (obj(zp).merit - obj(zm).merit) / 2e-6;
    EXPECT_NEAR(e.grad(j), fd, 1e-6 * std::max(1.0, std::abs(fd)));
  }
}

TEST(IbdBound, ScalarExamples) {
  const auto [b0, i0] = ibd_bound(scalar(0.0));
  EXPECT_NEAR(b0.value, 1.0, 1e-15);
  EXPECT_NEAR(i0.p2, 1.0, 1e-15);

  const auto [b, im] = ibd_bound(scalar(0.5));
  EXPECT_NEAR(im.q(0, 0).real(), 0.75, 1e-15);
  EXPECT_NEAR(std::abs(im.x0(0) - cplx(2.0 / 3.0)), 0.0, 1e-15);
  EXPECT_NEAR(im.p2, 4.0 / 3.0, 1e-14);
  EXPECT_NEAR(std::abs(im.h_c - cplx(2.0 / 3.0)), 0.0, 1e-15);
  EXPECT_NEAR(std::sqrt(im.a_qinv_a), 2.0 / std::sqrt(3.0), 1e-14);
  EXPECT_NEAR(b.value, 4.0, 1e-13);
}

TEST(IbdBound, Preconditions) {
  try {
    ibd_bound(scalar(0.0, 0.9, 1.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotUnitModulusLoads);
  }
  try {
    ibd_bound(scalar(1.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotContractive);
  }
}

TEST(IbdBound, DominatesEveryConfiguration) {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 20; ++t) {
    const Index n = 2 + static_cast<Index>(t % 9);
    const ModelParameters m = oracle::random_model(n, rng, -1.0, 1.0, 0.9);
    EXPECT_LE(es_oracle(m), ibd_bound(m).first.value * (1.0 + 1e-12));
  }
}

TEST(IbdBound, InvariantUnderUnimodularGauges) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ph(-3.14, 3.14);
  for (int t = 0; t < 10; ++t) {
    const ModelParameters m = oracle::random_model(5, rng, -1.0, 1.0, 0.8);
    GaugeParameters phi = GaugeParameters::identity(5);
    for (Index i = 0; i < 5; ++i) phi.d(i) = std::polar(1.0, ph(rng));
    phi.c = std::polar(1.0, ph(rng));
    const double b0 = ibd_bound(m).first.value, b1 = ibd_bound(apply_gauge(m, phi)).first.value;
    EXPECT_NEAR(b1, b0, 1e-8 * b0);
  }
}

TEST(IbdAchiever, ScalarExample) {
  const IbdAchiever a = ibd_achiever(scalar(0.0));
  EXPECT_FALSE(a.degenerate);
  EXPECT_NEAR(std::abs(a.phi(0, 0) - cplx(1.0)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(a.x(0) - cplx(1.0)), 0.0, 1e-15);
}

TEST(IbdAchiever, UnitaryAndAttainsBound) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 20; ++t) {
    const ModelParameters m = oracle::random_model(6, rng, -1.0, 1.0, 0.95);
    const IbdAchiever a = ibd_achiever(m);
    EXPECT_LE((a.phi.adjoint() * a.phi - CMat::Identity(6, 6)).norm(), 1e-12);
    const double b = ibd_bound(m).first.value;
    EXPECT_NEAR(std::norm(oracle::channel(m, a.phi)), b, 1e-8 * b);
  }
}

TEST(IbdAchiever, DegenerateWhenBIsZero) {
  const ModelParameters m(-1.0, 1.0, 0.5, CVec::Ones(2), CVec::Zero(2), CMat::Zero(2, 2));
  const IbdAchiever a = ibd_achiever(m);
  EXPECT_TRUE(a.degenerate);
  EXPECT_EQ(a.phi, CMat::Identity(2, 2));
}
