#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "risbound/sdp_solver.hpp"
#include "risbound/sdr.hpp"

using namespace risbound;

namespace {

ConicProgram from_planted(const oracle::PlantedSdp& p) {
  ConicProgram prog;
  prog.dim = p.n;
  prog.c = p.c;
  prog.a = p.a;
  prog.b = p.b;
  return prog;
}

RMat random_symmetric(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  RMat m(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) m(i, j) = nd(rng);
  return 0.5 * (m + m.transpose());
}

}  // namespace

TEST(PsdProject, Examples) {
  std::mt19937_64 rng(1);
  RMat g(4, 4);
  g = random_symmetric(4, rng);
  const RMat psd = g * g.transpose();
  EXPECT_LE((psd_project(psd) - psd).norm(), 1e-13 * std::max(1.0, psd.norm()));

  RMat d = RMat::Zero(2, 2);
  d(0, 0) = 1.0;
  d(1, 1) = -1.0;
  RMat expect = RMat::Zero(2, 2);
  expect(0, 0) = 1.0;
  EXPECT_LE((psd_project(d) - expect).norm(), 1e-15);
}

TEST(PsdProject, IdempotentAndNearest) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd;
  for (int t = 0; t < 20; ++t) {
    const RMat s = random_symmetric(6, rng);
    const RMat p = psd_project(s);
    EXPECT_LE((psd_project(p) - p).norm(), 1e-14 * std::max(1.0, p.norm()));
    Eigen::SelfAdjointEigenSolver<RMat> es(p);
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-14);
    const double dist = (s - p).norm();
    for (int k = 0; k < 50; ++k) {
      RMat g(6, 6);
      for (Index i = 0; i < 6; ++i)
        for (Index j = 0; j < 6; ++j) g(i, j) = 0.1 * nd(rng);
      const RMat q = psd_project(p + g * g.transpose() + 0.5 * (g + g.transpose()));
      EXPECT_LE(dist, (s - q).norm() + 1e-12);
    }
  }
}

TEST(SolveSdp, TwoByTwoEigenvalueProblem) {
  ConicProgram p;
  p.dim = 2;
  p.c = RMat::Zero(2, 2);
  p.c(0, 0) = 1.0;
  p.a.push_back(RMat::Identity(2, 2));
  p.b = RVec::Ones(1);
  for (const char* name : {"ipm", "admm"}) {
    const ConicSolution s = make_solver(name)->solve(p);
    EXPECT_EQ(s.status, SolveStatus::Optimal) << name;
    EXPECT_NEAR(s.primal_objective, 1.0, 1e-7) << name;
    RMat expect = RMat::Zero(2, 2);
    expect(0, 0) = 1.0;
    EXPECT_LE((s.x - expect).norm(), 1e-6) << name;
  }
}

TEST(SolveSdp, HandSolvedSingleElementRelaxation) {
  const ModelParameters m(-1.0, 1.0, 0.0, CVec::Ones(1), CVec::Ones(1), CMat::Zero(1, 1));
  const SdpProblem p = build_sdp(build_qcqp(m));
  const ConicSolution s = solve_sdp(p.embedded);
  EXPECT_EQ(s.status, SolveStatus::Optimal);
  EXPECT_NEAR(s.primal_objective, 1.0, 1e-7);
}

TEST(SolveSdp, PlantedSolutionsInteriorPoint) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 20; ++t) {
    const Index n = 4 + static_cast<Index>(rng() % 20);
    const Index k = 1 + static_cast<Index>(rng() % static_cast<std::uint64_t>(n));
    const oracle::PlantedSdp p = oracle::planted_sdp(n, k, rng);
    const ConicSolution s = solve_sdp(from_planted(p));
    EXPECT_EQ(s.status, SolveStatus::Optimal);
    EXPECT_NEAR(s.primal_objective, p.optimum, 1e-6 * std::max(1.0, std::abs(p.optimum)));
    EXPECT_NEAR(s.dual_objective, p.optimum, 1e-6 * std::max(1.0, std::abs(p.optimum)));
  }
}

TEST(SolveSdp, PlantedSolutionsSplitting) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 5; ++t) {
    const Index n = 4 + static_cast<Index>(rng() % 8);
    const oracle::PlantedSdp p = oracle::planted_sdp(n, 1 + static_cast<Index>(rng() % 4), rng);
    const ConicSolution s = SplittingSolver{}.solve(from_planted(p));
    EXPECT_EQ(s.status, SolveStatus::Optimal);
    EXPECT_NEAR(s.primal_objective, p.optimum, 1e-6 * std::max(1.0, std::abs(p.optimum)));
  }
}

TEST(SolveSdp, OptimalStatusImpliesTolerances) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 10; ++t) {
    const oracle::PlantedSdp p = oracle::planted_sdp(10, 5, rng);
    const ConicProgram prog = from_planted(p);
    const ConicSolution s = solve_sdp(prog);
    ASSERT_EQ(s.status, SolveStatus::Optimal);
    double pinf = 0.0;
    for (std::size_t k = 0; k < prog.a.size(); ++k)
      pinf = std::max(pinf, std::abs(prog.a[k].cwiseProduct(s.x).sum() - prog.b(static_cast<Index>(k))));
    EXPECT_LE(pinf, prog.options.eps_abs);
    const double obj = prog.c.cwiseProduct(s.x).sum();
    EXPECT_LE(std::abs(obj - prog.b.dot(s.y)), prog.options.eps_abs + prog.options.eps_rel * std::abs(obj));
    Eigen::SelfAdjointEigenSolver<RMat> es(s.x);
    EXPECT_GE(es.eigenvalues().minCoeff(), -prog.options.eps_abs);
    // Weak duality in maximization form.
    EXPECT_LE(obj, prog.b.dot(s.y) + prog.options.eps_abs + prog.options.eps_rel * std::abs(obj));
  }
}

TEST(SolveSdp, Deterministic) {
  std::mt19937_64 rng(6);
  const ConicProgram prog = from_planted(oracle::planted_sdp(8, 4, rng));
  const ConicSolution a = solve_sdp(prog), b = solve_sdp(prog);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.y, b.y);
}

TEST(ConicProgram, ValidatesInputs) {
  ConicProgram p;
  p.dim = 2;
  p.c = RMat::Zero(2, 2);
  RMat a = RMat::Zero(2, 2);
  a(0, 1) = 1.0;  // not symmetric
  p.a.push_back(a);
  p.b = RVec::Ones(1);
  EXPECT_THROW(solve_sdp(p), Error);
}
