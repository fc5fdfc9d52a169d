#pragma once

// Semidefinite relaxation of the binary gain-maximization problem.
//
// With x = (I - Phi Gamma)^{-1} Phi b the gain is a quadratic form in x, and
// the binary choice rho_i in {alpha, beta} of element i becomes the complex
// quadratic equality (x_i - alpha z_i)^* (x_i - beta z_i) = 0 with
// z = b + Gamma x. Lifting M = [x; 1][x; 1]^H and dropping rank one gives an
// SDP over Hermitian M >= 0 whose optimum bounds the gain from above.

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "risbound/core.hpp"
#include "risbound/gauge.hpp"
#include "risbound/mnt.hpp"
#include "risbound/sdp_solver.hpp"

namespace risbound {

struct QcqpData {
  Index n = 0;
  CMat r0;   // a^* a^T
  CVec q0;   // h0^* a
  double t0 = 0.0;  // |h0|^2
  std::vector<CMat> r;   // g_alpha,i^* g_beta,i^T
  std::vector<CVec> q1;  // -beta b_i g_alpha,i^*
  std::vector<CVec> q2;  // -alpha^* b_i^* g_beta,i
  std::vector<cplx> t;   // alpha^* beta |b_i|^2

  /// Objective x^H R0 x + 2 Re{q0^T x} + t0.
  double objective(const CVec& x) const { return x.dot(r0 * x).real() + 2.0 * q0.cwiseProduct(x).sum().real() + t0; }

  /// Residual of constraint i: x^H R_i x + x^H q1_i + q2_i^T x + t_i.
  cplx constraint(std::size_t i, const CVec& x) const {
    return x.dot(r[i] * x) + x.dot(q1[i]) + q2[i].cwiseProduct(x).sum() + t[i];
  }

  /// G_i = [[R_i, q1_i], [q2_i^T, t_i]] so that constraint i reads tr(G_i M) = 0.
  CMat g(std::size_t i) const {
    CMat out(n + 1, n + 1);
    out.topLeftCorner(n, n) = r[i];
    out.topRightCorner(n, 1) = q1[i];
    out.bottomLeftCorner(1, n) = q2[i].transpose();
    out(n, n) = t[i];
    return out;
  }

  /// G_0 = [[R0, q0^*], [q0^T, t0]] so that the objective reads tr(G_0 M).
  CMat g0() const {
    CMat out(n + 1, n + 1);
    out.topLeftCorner(n, n) = r0;
    out.topRightCorner(n, 1) = q0.conjugate();
    out.bottomLeftCorner(1, n) = q0.transpose();
    out(n, n) = t0;
    return out;
  }
};

inline QcqpData build_qcqp(const ModelParameters& th) {
  const Index n = th.n_s();
  const cplx al = th.alpha(), be = th.beta();
  QcqpData q;
  q.n = n;
  q.r0 = th.a().conjugate() * th.a().transpose();
  q.q0 = std::conj(th.h0()) * th.a();
  q.t0 = std::norm(th.h0());
  for (Index i = 0; i < n; ++i) {
    const CVec ci = th.gamma().row(i).transpose();
    CVec ga = -al * ci, gb = -be * ci;
    ga(i) += 1.0;
    gb(i) += 1.0;
    const cplx bi = th.b()(i);
    q.r.push_back(ga.conjugate() * gb.transpose());
    q.q1.push_back(-be * bi * ga.conjugate());
    q.q2.push_back(-std::conj(al) * std::conj(bi) * gb);
    q.t.push_back(std::conj(al) * be * std::norm(bi));
  }
  return q;
}

/// Real symmetric embedding H = A + jB  ->  [[A, -B], [B, A]].
inline RMat real_embedding(const CMat& h) {
  const Index n = h.rows();
  RMat out(2 * n, 2 * n);
  out.topLeftCorner(n, n) = h.real();
  out.topRightCorner(n, n) = -h.imag();
  out.bottomLeftCorner(n, n) = h.imag();
  out.bottomRightCorner(n, n) = h.real();
  return out;
}

/// Inverse of real_embedding after averaging the two copies of each block.
inline CMat complex_from_embedding(const RMat& y) {
  const Index n = y.rows() / 2;
  const RMat re = 0.5 * (y.topLeftCorner(n, n) + y.bottomRightCorner(n, n));
  const RMat im = 0.5 * (y.bottomLeftCorner(n, n) - y.topRightCorner(n, n));
  CMat out(n, n);
  out.real() = re;
  out.imag() = im;
  return out;
}

inline CMat hermitian_part(const CMat& g) { return 0.5 * (g + g.adjoint()); }
inline CMat antihermitian_part(const CMat& g) { return (g - g.adjoint()) / (2.0 * kJ); }

struct SdpConstraint {
  CMat h;            // Hermitian; constraint tr(h M) = rhs
  double rhs = 0.0;
  std::string label;
};

struct SdpProblem {
  Index n = 0;                 // lifted complex dimension n_s + 1
  CMat g0;                     // Hermitian objective, value tr(g0 M)
  std::vector<SdpConstraint> constraints;
  double trace_scale = 0.5;    // tr(H M) = trace_scale * tr(emb(H) emb(M))
  ConicProgram embedded;
};

/// Each complex equality tr(G_i M) = 0 becomes tr(Herm(G_i) M) = 0 and
/// tr(AntiHerm(G_i) M) = 0; the corner [M]_{n,n} = 1 is added once.
inline SdpProblem build_sdp(const QcqpData& q, const SdpOptions& opts = {}) {
  SdpProblem p;
  p.n = q.n + 1;
  p.g0 = hermitian_part(q.g0());
  for (std::size_t i = 0; i < q.r.size(); ++i) {
    const CMat gi = q.g(i);
    p.constraints.push_back({hermitian_part(gi), 0.0, "re" + std::to_string(i)});
    p.constraints.push_back({antihermitian_part(gi), 0.0, "im" + std::to_string(i)});
  }
  CMat corner = CMat::Zero(p.n, p.n);
  corner(q.n, q.n) = 1.0;
  p.constraints.push_back({corner, 1.0, "corner"});

  p.embedded.dim = 2 * p.n;
  p.embedded.c = p.trace_scale * real_embedding(p.g0);
  p.embedded.b.resize(static_cast<Index>(p.constraints.size()));
  for (std::size_t k = 0; k < p.constraints.size(); ++k) {
    p.embedded.a.push_back(p.trace_scale * real_embedding(p.constraints[k].h));
    p.embedded.b(static_cast<Index>(k)) = p.constraints[k].rhs;
  }
  p.embedded.options = opts;
  return p;
}

struct SdrSolution {
  double bound = 0.0;      // B_SDR
  CVec x_check;
  CMat X_check;
  CMat M_check;
  double effective_rank = 0.0;
  bool certified = false;  // solver reported Optimal
  SolveStatus status = SolveStatus::NumericalFailure;
  double primal_infeasibility = 0.0;
  double dual_infeasibility = 0.0;
  double gap = 0.0;
  double min_eigenvalue = 0.0;       // lambda_min(M)
  double max_constraint_residual = 0.0;  // max_i |tr(G_i M)|
  double solver_objective = 0.0;
  double dual_objective = 0.0;
  int iterations = 0;
};

/// exp of the Shannon entropy of the normalized (non-negative) spectrum.
inline double effective_rank(const CMat& x) {
  Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (x + x.adjoint()), Eigen::EigenvaluesOnly);
  const RVec lam = es.eigenvalues().cwiseMax(0.0);
  const double total = lam.sum();
  if (!(total > 0.0)) fail(ErrorCode::ZeroMatrix, "effective rank of a zero matrix");
  double h = 0.0;
  for (Index i = 0; i < lam.size(); ++i) {
    const double p = lam(i) / total;
    if (p > 0.0) h -= p * std::log(p);
  }
  return std::exp(h);
}

inline SdrSolution sdr_bound(const ModelParameters& th, const SdpSolver& solver, const SdpOptions& opts = {}) {
  const QcqpData q = build_qcqp(th);
  const SdpProblem p = build_sdp(q, opts);
  const ConicSolution cs = solver.solve(p.embedded);

  SdrSolution s;
  s.status = cs.status;
  s.certified = cs.status == SolveStatus::Optimal;
  s.primal_infeasibility = cs.primal_infeasibility;
  s.dual_infeasibility = cs.dual_infeasibility;
  s.gap = cs.gap;
  s.solver_objective = cs.primal_objective;
  s.dual_objective = cs.dual_objective;
  s.iterations = cs.iterations;
  if (!cs.x.allFinite() || cs.x.size() == 0) {
    s.certified = false;
    s.status = SolveStatus::NumericalFailure;
    return s;
  }
  s.M_check = complex_from_embedding(cs.x);
  const Index n = q.n;
  s.X_check = s.M_check.topLeftCorner(n, n);
  s.x_check = s.M_check.topRightCorner(n, 1);
  s.bound = (q.r0 * s.X_check).trace().real() + 2.0 * q.q0.cwiseProduct(s.x_check).sum().real() + q.t0;
  Eigen::SelfAdjointEigenSolver<CMat> es(s.M_check, Eigen::EigenvaluesOnly);
  s.min_eigenvalue = es.eigenvalues()(0);
  for (std::size_t i = 0; i < q.r.size(); ++i)
    s.max_constraint_residual = std::max(s.max_constraint_residual, std::abs((q.g(i) * s.M_check).trace()));
  try {
    s.effective_rank = effective_rank(s.X_check);
  } catch (const Error&) {
    s.effective_rank = 0.0;
  }
  return s;
}

inline SdrSolution sdr_bound(const ModelParameters& th, const SdpOptions& opts = {}) {
  return sdr_bound(th, InteriorPointSolver{}, opts);
}

struct GaugeIdentityResiduals {
  std::string gauge;                       // "identity", "diagonal-similarity", "complex-scaling", "mobius"
  std::vector<double> constraint;          // ||G_i(th~) - eta_i T^{-H} G_i(th) T^{-1}||_F
  std::vector<double> constraint_relative; // divided by ||G_i(th~)||_F
  double objective = 0.0;                  // ||G_0(th~) - T^{-H} G_0(th) T^{-1}||_F
  double objective_relative = 0.0;
  double trace = 0.0;                      // max_i |tr(G_i~ M~) - eta_i tr(G_i M)| / scale on random M
  double trace_objective = 0.0;            // |tr(G_0~ M~) - tr(G_0 M)| / scale

  double max_relative() const {
    double r = objective_relative;
    for (double v : constraint_relative) r = std::max(r, v);
    return r;
  }
};

/// Checks the lifted-variable identities behind the gauge invariance of the
/// relaxation: with M~ = T M T^H,
///   G_i(th~) = eta_i T^{-H} G_i(th) T^{-1},   G_0(th~) = T^{-H} G_0(th) T^{-1}.
/// Exactly one gauge of phi may differ from the identity.
inline GaugeIdentityResiduals gauge_identity_check(const ModelParameters& th, const GaugeParameters& phi,
                                                   std::uint64_t seed = 0) {
  const Index n = th.n_s();
  if (phi.d.size() != n) fail(ErrorCode::InvalidArgument, "d must have length n_s");
  const bool ds = (phi.d.array() != cplx{1.0}).any();
  const bool cs = phi.c != cplx{1.0};
  const bool mo = phi.m != cplx{0.0};
  if (int(ds) + int(cs) + int(mo) > 1) fail(ErrorCode::InvalidArgument, "exactly one gauge may be active per identity check");

  GaugeIdentityResiduals res;
  const ModelParameters tt = apply_gauge(th, phi);
  CMat t = CMat::Identity(n + 1, n + 1);
  std::vector<cplx> eta(static_cast<std::size_t>(n), cplx{1.0});
  if (ds) {
    res.gauge = "diagonal-similarity";
    t.topLeftCorner(n, n) = phi.d.asDiagonal();
    for (Index i = 0; i < n; ++i) eta[static_cast<std::size_t>(i)] = std::norm(phi.d(i));
  } else if (cs) {
    res.gauge = "complex-scaling";
    t.topLeftCorner(n, n) *= phi.c;
    for (auto& e : eta) e = std::norm(phi.c);
  } else if (mo) {
    res.gauge = "mobius";
    const double k = std::sqrt(1.0 - std::norm(phi.m));
    CMat w = -phi.m * th.gamma();
    w.diagonal().array() += 1.0;
    t.topLeftCorner(n, n) = w / k;
    t.topRightCorner(n, 1) = -phi.m * th.b() / k;
    const cplx ea = std::conj(k / (1.0 - std::conj(phi.m) * th.alpha()));
    const cplx eb = k / (1.0 - std::conj(phi.m) * th.beta());
    for (auto& e : eta) e = ea * eb;
  } else {
    res.gauge = "identity";
  }

  const QcqpData q = build_qcqp(th), qt = build_qcqp(tt);
  const Eigen::PartialPivLU<CMat> tlu(t);
  const CMat tinv = tlu.inverse();
  const CMat tinvh = tinv.adjoint();

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  CMat rnd(n + 1, n + 1);
  for (Index i = 0; i < n + 1; ++i)
    for (Index j = 0; j < n + 1; ++j) rnd(i, j) = cplx{nd(rng), nd(rng)};
  const CMat mrand = rnd * rnd.adjoint();
  const CMat mt = t * mrand * t.adjoint();

  for (std::size_t i = 0; i < q.r.size(); ++i) {
    const CMat gi = q.g(i), gti = qt.g(i);
    const CMat pred = eta[i] * tinvh * gi * tinv;
    const double r = (gti - pred).norm();
    res.constraint.push_back(r);
    res.constraint_relative.push_back(r / std::max(gti.norm(), 1e-300));
    const cplx lhs = (gti * mt).trace(), rhs = eta[i] * (gi * mrand).trace();
    const double scale = std::max({1.0, std::abs(lhs), gti.norm() * mt.norm()});
    res.trace = std::max(res.trace, std::abs(lhs - rhs) / scale);
  }
  const CMat g0 = q.g0(), g0t = qt.g0();
  res.objective = (g0t - tinvh * g0 * tinv).norm();
  res.objective_relative = res.objective / std::max(g0t.norm(), 1e-300);
  const cplx lhs = (g0t * mt).trace(), rhs = (g0 * mrand).trace();
  res.trace_objective = std::abs(lhs - rhs) / std::max({1.0, std::abs(lhs), g0t.norm() * mt.norm()});
  return res;
}

}  // namespace risbound
