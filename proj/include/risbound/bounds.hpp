#pragma once

// Analytic upper bounds on |h(v)|^2: the norm-inequality bound, its
// gauge-optimized variant, and the closed-form bound obtained by relaxing the
// diagonal unit-modulus loads to an arbitrary lossless load network.

#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "risbound/core.hpp"
#include "risbound/gauge.hpp"
#include "risbound/mnt.hpp"

namespace risbound {

enum class BoundKind { NI, NIO, IBD, SDR };

inline std::string_view to_string(BoundKind k) {
  switch (k) {
    case BoundKind::NI: return "NI";
    case BoundKind::NIO: return "NIO";
    case BoundKind::IBD: return "IBD";
    case BoundKind::SDR: return "SDR";
  }
  return "?";
}

struct BoundReport {
  BoundKind kind = BoundKind::NI;
  double value = 0.0;  // bound on |h|^2
  bool valid = false;
  std::string reason;  // violated precondition when !valid
  std::map<std::string, double> diagnostics;
  std::optional<GaugeParameters> gauge;  // NIO: best gauge found
};

namespace detail {

inline double ni_value(cplx h0, const CVec& a, const CVec& b, double gamma_max, double gamma_norm) {
  const double t = std::abs(h0) + a.norm() * gamma_max / (1.0 - gamma_max * gamma_norm) * b.norm();
  return t * t;
}

inline double load_radius(cplx alpha, cplx beta) { return std::max(std::abs(alpha), std::abs(beta)); }

}  // namespace detail

/// B_NI = (|h0| + ||a|| gamma / (1 - gamma ||Gamma||) ||b||)^2 with
/// gamma = max(|alpha|, |beta|); valid only when gamma ||Gamma|| < 1.
inline BoundReport ni_bound(const ModelParameters& th) {
  BoundReport rep;
  rep.kind = BoundKind::NI;
  const double g = detail::load_radius(th.alpha(), th.beta());
  const double gn = detail::spectral_norm(th.gamma());
  rep.diagnostics["gamma"] = g;
  rep.diagnostics["gamma_norm"] = gn;
  rep.diagnostics["gamma_times_norm"] = g * gn;
  if (!(g * gn < 1.0)) {
    rep.valid = false;
    rep.reason = "gamma*||Gamma||_2 >= 1";
    return rep;
  }
  rep.valid = true;
  rep.value = detail::ni_value(th.h0(), th.a(), th.b(), g, gn);
  return rep;
}

struct NioOptions {
  int restarts = 8;             // identity start plus (restarts - 1) random ones
  int max_iters = 500;
  double min_step = 1e-12;
  double tolerance = 1e-10;     // relative merit decrease that counts as progress
  int patience = 10;            // iterations without progress before stopping
  double barrier = 1e-8;        // weight of -log(1 - gamma~ ||Gamma~||)
  double perturbation = 0.3;    // spread of random restarts
  std::uint64_t seed = 0;
};

namespace detail {

// log B_NI of g(theta; [d, 1, m]) with d_i = exp(u_i) and z = (u, Re m, Im m),
// plus a small log barrier on the validity slack. Phases of d are left out:
// a unitary diagonal similarity changes none of the norms in B_NI, before or
// after the Moebius stage. Returns +inf outside the admissible set.
struct NioObjective {
  const ModelParameters& th;
  double barrier;

  struct Eval {
    double bound = std::numeric_limits<double>::infinity();
    double merit = std::numeric_limits<double>::infinity();
    RVec grad;  // filled when requested and the point is admissible
  };

  static GaugeParameters decode(const RVec& z, Index n) {
    GaugeParameters phi;
    phi.d = z.head(n).array().exp().cast<cplx>();
    phi.c = 1.0;
    phi.m = cplx{z(n), z(n + 1)};
    return phi;
  }

  Eval operator()(const RVec& z, bool with_grad = false) const {
    Eval out;
    const Index n = th.n_s();
    const cplx m{z(n), z(n + 1)};
    if (!(std::norm(m) < 1.0) || !z.allFinite()) return out;
    for (cplx rho : {th.alpha(), th.beta()})
      if (std::abs(1.0 - std::conj(m) * rho) <= 1e-12) return out;

    const RVec d = z.head(n).array().exp();
    const CVec a1 = th.a().cwiseQuotient(d.cast<cplx>());
    const CVec b1 = th.b().cwiseProduct(d.cast<cplx>());
    const CMat g1 = d.cast<cplx>().asDiagonal() * th.gamma() * d.cwiseInverse().cast<cplx>().asDiagonal();

    CMat sys = -m * g1;
    sys.diagonal().array() += 1.0;
    Eigen::PartialPivLU<CMat> lu(sys);
    if (!(lu.rcond() > 1e-10)) return out;
    const CMat f = lu.inverse();
    const double k = std::sqrt(1.0 - std::norm(m));
    const CVec fb = f * b1;
    const CVec fta = f.transpose() * a1;
    const cplx h0 = th.h0() + m * a1.cwiseProduct(fb).sum();
    const CVec at = k * fta;
    const CVec bt = k * fb;
    CMat gm = g1;
    gm.diagonal().array() -= std::conj(m);
    const CMat gt = gm * f;
    const cplx al = mobius_map(th.alpha(), m), be = mobius_map(th.beta(), m);
    const bool use_alpha = std::abs(al) >= std::abs(be);
    const cplx rho_top = use_alpha ? al : be;
    const double gam = std::abs(rho_top);

    Eigen::SelfAdjointEigenSolver<CMat> es(gt.adjoint() * gt);
    const double sigma = std::sqrt(std::max(0.0, es.eigenvalues()(n - 1)));
    const double slack = 1.0 - gam * sigma;
    if (!(slack > 0.0)) return out;
    const double na = at.norm(), nb = bt.norm(), ah = std::abs(h0);
    const double p = na * nb * gam / slack;
    out.bound = (ah + p) * (ah + p);
    out.merit = 2.0 * std::log(ah + p) - barrier * std::log(slack);
    if (!std::isfinite(out.merit)) {
      out.bound = out.merit = std::numeric_limits<double>::infinity();
      return out;
    }
    if (!with_grad) return out;

    // Directional derivatives along each coordinate of z.
    const CVec v1 = es.eigenvectors().col(n - 1);
    const CVec u1 = sigma > 0.0 ? CVec(gt * v1 / sigma) : CVec::Zero(n);
    const cplx rho0 = use_alpha ? th.alpha() : th.beta();
    out.grad.resize(n + 2);
    for (Index j = 0; j < n + 2; ++j) {
      CVec da1 = CVec::Zero(n), db1 = CVec::Zero(n);
      CMat dg1 = CMat::Zero(n, n);
      cplx dm{0.0};
      if (j < n) {
        da1(j) = -a1(j);
        db1(j) = b1(j);
        dg1.row(j) += g1.row(j);
        dg1.col(j) -= g1.col(j);
      } else {
        dm = j == n ? cplx{1.0} : kJ;
      }
      const CMat df = f * (dm * g1 + m * dg1) * f;
      const double dk = -(std::conj(m) * dm).real() / k;
      const cplx dh0 = dm * a1.cwiseProduct(fb).sum() +
                       m * (da1.cwiseProduct(fb).sum() + a1.cwiseProduct(df * b1).sum() + fta.cwiseProduct(db1).sum());
      const CVec dat = dk * fta + k * (df.transpose() * a1 + f.transpose() * da1);
      const CVec dbt = dk * fb + k * (df * b1 + f * db1);
      CMat dgt = dg1 * f + gm * df;
      dgt -= std::conj(dm) * f;
      const cplx den = 1.0 - std::conj(m) * rho0;
      const cplx drho = (-dm * den + (rho0 - m) * std::conj(dm) * rho0) / (den * den);
      const double dgam = gam > 0.0 ? (std::conj(rho_top) * drho).real() / gam : 0.0;
      const double dsig = u1.dot(dgt * v1).real();
      const double dna = na > 0.0 ? at.dot(dat).real() / na : 0.0;
      const double dnb = nb > 0.0 ? bt.dot(dbt).real() / nb : 0.0;
      const double dah = ah > 0.0 ? (std::conj(h0) * dh0).real() / ah : 0.0;
      const double dslack = -(dgam * sigma + gam * dsig);
      const double dp = (dna * nb * gam + na * dnb * gam + na * nb * dgam) / slack - p * dslack / slack;
      out.grad(j) = 2.0 * (dah + dp) / (ah + p) - barrier * dslack / slack;
    }
    return out;
  }
};

}  // namespace detail

/// B_NIO: minimum of B_NI over diagonal-similarity and Moebius gauges (c = 1).
/// Multi-start BFGS with a backtracking line search; the identity gauge is
/// always a candidate, so the result never exceeds ni_bound(th).
inline BoundReport nio_bound(const ModelParameters& th, const NioOptions& opts = {}) {
  BoundReport rep;
  rep.kind = BoundKind::NIO;
  const BoundReport ni = ni_bound(th);
  if (!ni.valid) {
    rep.valid = false;
    rep.reason = "identity gauge infeasible: " + ni.reason;
    return rep;
  }

  const Index n = th.n_s();
  const Index dim = n + 2;
  detail::NioObjective obj{th, opts.barrier};
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  RVec best_z = RVec::Zero(dim);
  double best_bound = ni.value;
  long total_iters = 0;
  long total_evals = 0;

  for (int r = 0; r < std::max(1, opts.restarts); ++r) {
    RVec z = RVec::Zero(dim);
    if (r > 0) {
      for (Index i = 0; i < n; ++i) z(i) = opts.perturbation * normal(rng);
      const double rad = std::min(opts.perturbation * std::abs(normal(rng)), 0.9);
      const double ang = 2.0 * std::numbers::pi * unif(rng);
      z(n) = rad * std::cos(ang);
      z(n + 1) = rad * std::sin(ang);
    }
    auto cur = obj(z, true);
    ++total_evals;
    if (!std::isfinite(cur.merit)) continue;

    RMat hinv = RMat::Identity(dim, dim);
    int stall = 0;
    for (int it = 0; it < opts.max_iters; ++it) {
      ++total_iters;
      RVec dir = -(hinv * cur.grad);
      double slope = cur.grad.dot(dir);
      if (!(slope < 0.0)) {
        hinv.setIdentity();
        dir = -cur.grad;
        slope = -cur.grad.squaredNorm();
      }
      if (!(slope < 0.0)) break;
      // Keep the first trial inside a sensible box; m must stay in the unit disk.
      double step = std::min(1.0, 1.0 / std::max(dir.lpNorm<Eigen::Infinity>(), 1e-300));
      bool accepted = false;
      detail::NioObjective::Eval next;
      while (step >= opts.min_step) {
        next = obj(z + step * dir, true);
        ++total_evals;
        if (next.merit <= cur.merit + 1e-4 * step * slope) {
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) break;
      const RVec s = step * dir;
      const RVec y = next.grad - cur.grad;
      const double rel = (cur.merit - next.merit) / std::max(1.0, std::abs(cur.merit));
      z += s;
      cur = std::move(next);
      const double sy = s.dot(y);
      if (sy > 1e-12 * s.norm() * y.norm()) {
        const RVec hy = hinv * y;
        const double rho = 1.0 / sy;
        hinv += (rho * rho * y.dot(hy) + rho) * (s * s.transpose()) - rho * (hy * s.transpose() + s * hy.transpose());
      }
      if (cur.bound < best_bound) {
        best_bound = cur.bound;
        best_z = z;
      }
      stall = rel < opts.tolerance ? stall + 1 : 0;
      if (stall >= opts.patience) break;
    }
    if (cur.bound < best_bound) {
      best_bound = cur.bound;
      best_z = z;
    }
  }

  // Re-evaluate the winner through the public gauge path; keep the identity
  // gauge whenever that does not confirm an improvement.
  GaugeParameters phi = detail::NioObjective::decode(best_z, n);
  double value = ni.value;
  bool improved = false;
  if (best_bound < ni.value) {
    try {
      const BoundReport check = ni_bound(apply_gauge(th, phi));
      if (check.valid && check.value < ni.value) {
        value = check.value;
        improved = true;
      }
    } catch (const Error&) {
    }
  }
  if (!improved) phi = GaugeParameters::identity(n);

  rep.valid = true;
  rep.value = value;
  rep.gauge = phi;
  rep.diagnostics["ni_value"] = ni.value;
  rep.diagnostics["improved"] = improved ? 1.0 : 0.0;
  rep.diagnostics["iterations"] = static_cast<double>(total_iters);
  rep.diagnostics["evaluations"] = static_cast<double>(total_evals);
  rep.diagnostics["abs_m"] = std::abs(phi.m);
  return rep;
}

struct IbdIntermediates {
  CMat q;        // I - Gamma^H Gamma
  CVec x0;       // ellipsoid center Q^{-1} Gamma^H b
  double p2 = 0; // squared radius b^H b + b^H Gamma Q^{-1} Gamma^H b
  cplx h_c;      // h0 + a^T x0
  double a_qinv_a = 0;  // a^T Q^{-1} a*
};

struct IbdOptions {
  double unit_modulus_tol = 1e-9;
  double contractivity_margin = 1e-12;
  double eigen_floor = 1e-14;
};

namespace detail {

inline void check_ibd_preconditions(const ModelParameters& th, const IbdOptions& opts) {
  if (std::abs(std::abs(th.alpha()) - 1.0) > opts.unit_modulus_tol || std::abs(std::abs(th.beta()) - 1.0) > opts.unit_modulus_tol)
    fail(ErrorCode::NotUnitModulusLoads, "requires |alpha| = |beta| = 1");
  const double gn = spectral_norm(th.gamma());
  if (!(gn < 1.0 - opts.contractivity_margin))
    fail(ErrorCode::NotContractive, "largest singular value of Gamma is " + std::to_string(gn));
}

}  // namespace detail

inline IbdIntermediates ibd_intermediates(const ModelParameters& th, const IbdOptions& opts = {}) {
  detail::check_ibd_preconditions(th, opts);
  const Index n = th.n_s();
  IbdIntermediates out;
  out.q = CMat::Identity(n, n) - th.gamma().adjoint() * th.gamma();
  Eigen::LLT<CMat> llt(out.q);
  if (llt.info() != Eigen::Success) fail(ErrorCode::NotContractive, "Q = I - Gamma^H Gamma is not positive definite");
  const CVec gb = th.gamma().adjoint() * th.b();
  out.x0 = llt.solve(gb);
  out.p2 = th.b().squaredNorm() + gb.dot(out.x0).real();
  out.h_c = th.h0() + th.a().cwiseProduct(out.x0).sum();
  const CVec ac = th.a().conjugate();
  out.a_qinv_a = ac.dot(llt.solve(ac)).real();
  return out;
}

/// B_IBD = (|h_c| + p sqrt(a^T Q^{-1} a*))^2 for unit-modulus loads and a
/// strictly contractive Gamma.
inline std::pair<BoundReport, IbdIntermediates> ibd_bound(const ModelParameters& th, const IbdOptions& opts = {}) {
  IbdIntermediates im = ibd_intermediates(th, opts);
  BoundReport rep;
  rep.kind = BoundKind::IBD;
  const double t = std::abs(im.h_c) + std::sqrt(std::max(0.0, im.p2)) * std::sqrt(std::max(0.0, im.a_qinv_a));
  rep.value = t * t;
  rep.valid = true;
  rep.diagnostics["p2"] = im.p2;
  rep.diagnostics["abs_h_c"] = std::abs(im.h_c);
  rep.diagnostics["gamma_norm"] = detail::spectral_norm(th.gamma());
  return {rep, im};
}

struct IbdAchiever {
  CMat phi;                 // unitary load network attaining B_IBD
  CVec x;                   // x = (I - Phi Gamma)^{-1} Phi b
  bool degenerate = false;  // ||x|| = 0: phi is the identity
};

namespace detail {

// Unitary matrix whose first column is v / ||v||.
inline CMat orthonormal_completion(const CVec& v) {
  const Index n = v.size();
  Eigen::HouseholderQR<CMat> qr(v);
  CMat q = qr.householderQ() * CMat::Identity(n, n);
  const cplx c = q.col(0).dot(v / v.norm());  // q0^H v^
  q.col(0) *= c / std::abs(c);
  return q;
}

inline CMat hermitian_inv_sqrt(const CMat& q, double floor) {
  Eigen::SelfAdjointEigenSolver<CMat> es(q);
  const RVec lam = es.eigenvalues().cwiseMax(floor);
  return es.eigenvectors() * lam.cwiseSqrt().cwiseInverse().asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace detail

/// Lossless load network attaining B_IBD: x = x0 + Q^{-1/2} y with
/// y = (p / ||Q^{-1/2} a*||) e^{j arg h_c} Q^{-1/2} a*, z = b + Gamma x, and
/// Phi = Q_x Q_z^H mapping z onto x (so Phi^H x = z).
inline IbdAchiever ibd_achiever(const ModelParameters& th, const IbdOptions& opts = {}) {
  const IbdIntermediates im = ibd_intermediates(th, opts);
  const Index n = th.n_s();
  const CMat qis = detail::hermitian_inv_sqrt(im.q, opts.eigen_floor);
  const CVec u = qis * th.a().conjugate();
  const double p = std::sqrt(std::max(0.0, im.p2));
  const double phase = std::abs(im.h_c) > 0.0 ? std::arg(im.h_c) : 0.0;
  CVec y = CVec::Zero(n);
  if (u.norm() > 0.0) y = (p / u.norm()) * std::exp(kJ * phase) * u;

  IbdAchiever out;
  out.x = im.x0 + qis * y;
  const CVec z = th.b() + th.gamma() * out.x;
  if (!(out.x.norm() > 0.0) || !(z.norm() > 0.0)) {
    out.phi = CMat::Identity(n, n);
    out.degenerate = true;
    return out;
  }
  out.phi = detail::orthonormal_completion(out.x) * detail::orthonormal_completion(z).adjoint();
  return out;
}

}  // namespace risbound
