#pragma once

// Dense real symmetric SDP in maximization form:
//
//   maximize  <C, X>   subject to  <A_k, X> = b_k,  X >= 0
//   dual:     minimize b^T y  subject to  Z = sum_k y_k A_k - C >= 0
//
// Two interchangeable backends: a primal-dual interior-point method (default)
// and an ADMM operator-splitting method.

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "risbound/core.hpp"

namespace risbound {

struct SdpOptions {
  double eps_abs = 1e-8;
  double eps_rel = 1e-7;
  int max_iters = 50000;      // splitting iterations
  int ipm_max_iters = 120;    // interior-point iterations
  double ipm_step_fraction = 0.98;
  double admm_rho = 1.0;
  double admm_relaxation = 1.5;
  int admm_check_every = 10;
};

struct ConicProgram {
  Index dim = 0;
  RMat c;
  std::vector<RMat> a;
  RVec b;
  SdpOptions options;

  void validate() const {
    if (dim < 1) fail(ErrorCode::InvalidArgument, "conic program dimension must be positive");
    if (c.rows() != dim || c.cols() != dim) fail(ErrorCode::InvalidArgument, "objective matrix has wrong shape");
    if (static_cast<Index>(a.size()) != b.size()) fail(ErrorCode::InvalidArgument, "constraint count mismatch");
    if ((c - c.transpose()).cwiseAbs().maxCoeff() > 1e-14 * std::max(1.0, c.cwiseAbs().maxCoeff()))
      fail(ErrorCode::InvalidArgument, "objective matrix is not symmetric");
    for (std::size_t k = 0; k < a.size(); ++k) {
      if (a[k].rows() != dim || a[k].cols() != dim)
        fail(ErrorCode::InvalidArgument, "constraint " + std::to_string(k) + " has wrong shape");
      if ((a[k] - a[k].transpose()).cwiseAbs().maxCoeff() > 1e-14 * std::max(1.0, a[k].cwiseAbs().maxCoeff()))
        fail(ErrorCode::InvalidArgument, "constraint " + std::to_string(k) + " is not symmetric");
    }
    if (!c.allFinite() || !b.allFinite()) fail(ErrorCode::InvalidArgument, "non-finite problem data");
  }
};

enum class SolveStatus { Optimal, MaxIters, NumericalFailure };

inline std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::MaxIters: return "MaxIters";
    case SolveStatus::NumericalFailure: return "NumericalFailure";
  }
  return "?";
}

struct ConicSolution {
  RMat x;
  RMat z;  // dual slack
  RVec y;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double primal_infeasibility = std::numeric_limits<double>::infinity();  // max_k |<A_k,X> - b_k|
  double dual_infeasibility = std::numeric_limits<double>::infinity();    // ||sum y A - C - Z||_F
  double gap = std::numeric_limits<double>::infinity();                   // |b^T y - <C,X>|
  double min_eigenvalue = -std::numeric_limits<double>::infinity();      // lambda_min(X)
  int iterations = 0;
  SolveStatus status = SolveStatus::NumericalFailure;
  std::string solver;
};

/// Nearest PSD matrix in Frobenius norm: clamp negative eigenvalues.
inline RMat psd_project(const RMat& s) {
  const RMat sym = 0.5 * (s + s.transpose());
  Eigen::SelfAdjointEigenSolver<RMat> es(sym);
  const RVec lam = es.eigenvalues().cwiseMax(0.0);
  RMat out = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

namespace detail {

inline double frob_dot(const RMat& x, const RMat& y) { return x.cwiseProduct(y).sum(); }
inline RMat sym(const RMat& m) { return 0.5 * (m + m.transpose()); }

inline double min_eig(const RMat& m) {
  Eigen::SelfAdjointEigenSolver<RMat> es(sym(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

inline RMat apply_adjoint(const std::vector<RMat>& a, const RVec& y, Index n) {
  RMat out = RMat::Zero(n, n);
  for (std::size_t k = 0; k < a.size(); ++k) out.noalias() += y(static_cast<Index>(k)) * a[k];
  return out;
}

inline RVec apply_op(const std::vector<RMat>& a, const RMat& x) {
  RVec out(static_cast<Index>(a.size()));
  for (std::size_t k = 0; k < a.size(); ++k) out(static_cast<Index>(k)) = frob_dot(a[k], x);
  return out;
}

/// Fills residuals and status of `sol` against the original (unscaled) data.
inline void assess(const ConicProgram& p, ConicSolution& sol) {
  const auto& o = p.options;
  sol.primal_objective = frob_dot(p.c, sol.x);
  sol.dual_objective = p.b.dot(sol.y);
  sol.primal_infeasibility = p.a.empty() ? 0.0 : (apply_op(p.a, sol.x) - p.b).cwiseAbs().maxCoeff();
  sol.dual_infeasibility = (apply_adjoint(p.a, sol.y, p.dim) - p.c - sol.z).norm();
  sol.gap = std::abs(sol.dual_objective - sol.primal_objective);
  sol.min_eigenvalue = min_eig(sol.x);
  const bool finite = sol.x.allFinite() && sol.y.allFinite() && sol.z.allFinite();
  if (!finite) {
    sol.status = SolveStatus::NumericalFailure;
    return;
  }
  const bool ok = sol.primal_infeasibility <= o.eps_abs &&
                  sol.dual_infeasibility <= o.eps_abs * std::max(1.0, p.c.norm()) &&
                  sol.gap <= o.eps_abs + o.eps_rel * std::abs(sol.primal_objective) && sol.min_eigenvalue >= -o.eps_abs;
  sol.status = ok ? SolveStatus::Optimal : SolveStatus::MaxIters;
}

inline double merit(const ConicProgram& p, const ConicSolution& s) {
  const auto& o = p.options;
  return std::max({s.primal_infeasibility / o.eps_abs, s.dual_infeasibility / (o.eps_abs * std::max(1.0, p.c.norm())),
                   s.gap / (o.eps_abs + o.eps_rel * std::abs(s.primal_objective)), -s.min_eigenvalue / o.eps_abs});
}

/// Largest step t in (0, 1] keeping x + t dx PSD, times `fraction`.
inline double step_to_boundary(const RMat& x, const RMat& dx, double fraction) {
  Eigen::LLT<RMat> llt(x);
  if (llt.info() != Eigen::Success) return 0.0;
  const RMat l = llt.matrixL();
  RMat t = llt.matrixL().solve(dx);
  t = l.triangularView<Eigen::Lower>().solve(t.transpose()).transpose();
  const double lmin = min_eig(t);
  if (!std::isfinite(lmin)) return 0.0;
  if (lmin >= 0.0) return 1.0;
  return std::min(1.0, fraction * (-1.0 / lmin));
}

/// Row equilibration plus removal of linearly dependent constraints.
struct ScaledProgram {
  RMat c;                 // -C / c_scale  (minimization form)
  std::vector<RMat> a;    // A_k / ||A_k||
  RVec b;
  std::vector<Index> kept;  // original constraint index of each row
  RVec row_scale;           // 1 / ||A_k||
  double c_scale = 1.0;
};

inline ScaledProgram equilibrate(const ConicProgram& p) {
  ScaledProgram s;
  const Index n = p.dim;
  const Index m = static_cast<Index>(p.a.size());
  const double cn = p.c.norm();
  s.c_scale = cn > 0.0 ? cn : 1.0;
  s.c = -p.c / s.c_scale;

  RMat vecs(n * n, m);
  RVec norms(m);
  for (Index k = 0; k < m; ++k) {
    norms(k) = p.a[static_cast<std::size_t>(k)].norm();
    const double sc = norms(k) > 0.0 ? 1.0 / norms(k) : 0.0;
    vecs.col(k) = Eigen::Map<const RVec>(p.a[static_cast<std::size_t>(k)].data(), n * n) * sc;
  }
  // Greedy Gram-Schmidt keeps the first independent subset in input order.
  RMat basis(n * n, m);
  Index rank = 0;
  for (Index k = 0; k < m; ++k) {
    if (!(norms(k) > 0.0)) continue;
    RVec v = vecs.col(k);
    for (int pass = 0; pass < 2; ++pass)
      for (Index j = 0; j < rank; ++j) v -= basis.col(j).dot(v) * basis.col(j);
    const double vn = v.norm();
    if (vn <= 1e-10) continue;
    basis.col(rank++) = v / vn;
    s.kept.push_back(k);
  }
  s.row_scale.resize(static_cast<Index>(s.kept.size()));
  s.b.resize(static_cast<Index>(s.kept.size()));
  for (std::size_t r = 0; r < s.kept.size(); ++r) {
    const Index k = s.kept[r];
    const double sc = 1.0 / norms(k);
    s.row_scale(static_cast<Index>(r)) = sc;
    s.a.push_back(p.a[static_cast<std::size_t>(k)] * sc);
    s.b(static_cast<Index>(r)) = p.b(k) * sc;
  }
  return s;
}

}  // namespace detail

/// Backend interface; implementations are stateless between solves.
class SdpSolver {
 public:
  virtual ~SdpSolver() = default;
  virtual ConicSolution solve(const ConicProgram& prob) const = 0;
  virtual std::string_view name() const = 0;
};

/// Infeasible primal-dual path following with the HKM search direction and
/// Mehrotra predictor-corrector steps.
class InteriorPointSolver final : public SdpSolver {
 public:
  std::string_view name() const override { return "interior-point"; }

  ConicSolution solve(const ConicProgram& prob) const override {
    prob.validate();
    const auto& o = prob.options;
    const Index n = prob.dim;
    const detail::ScaledProgram sp = detail::equilibrate(prob);
    const Index m = static_cast<Index>(sp.a.size());

    double bmax = 0.0;
    for (Index k = 0; k < m; ++k) bmax = std::max(bmax, 1.0 + std::abs(sp.b(k)));
    const double xi = std::max({10.0, std::sqrt(static_cast<double>(n)), bmax});
    const double eta = std::max(10.0, std::sqrt(static_cast<double>(n)));
    RMat x = xi * RMat::Identity(n, n);
    RMat z = eta * RMat::Identity(n, n);
    RVec y = RVec::Zero(m);

    ConicSolution best;
    best.solver = std::string(name());
    double best_merit = std::numeric_limits<double>::infinity();
    auto record = [&](int it) {
      ConicSolution cand;
      cand.solver = best.solver;
      cand.iterations = it;
      cand.x = x;
      cand.y = RVec::Zero(static_cast<Index>(prob.a.size()));
      for (Index r = 0; r < m; ++r) cand.y(sp.kept[static_cast<std::size_t>(r)]) = -y(r) * sp.row_scale(r) * sp.c_scale;
      cand.z = z * sp.c_scale;
      detail::assess(prob, cand);
      const double mer = detail::merit(prob, cand);
      if (cand.status != SolveStatus::NumericalFailure && (mer < best_merit || cand.status == SolveStatus::Optimal)) {
        best_merit = mer;
        best = std::move(cand);
      }
      return best.status == SolveStatus::Optimal;
    };

    int stalls = 0;
    for (int it = 0; it < o.ipm_max_iters; ++it) {
      if (record(it)) return best;

      const RVec rp = sp.b - detail::apply_op(sp.a, x);
      const RMat rd = sp.c - detail::apply_adjoint(sp.a, y, n) - z;
      const double mu = detail::frob_dot(x, z) / static_cast<double>(n);

      Eigen::LLT<RMat> zchol(z);
      if (zchol.info() != Eigen::Success) break;
      const RMat zinv = zchol.solve(RMat::Identity(n, n));

      // Schur complement S_ij = <A_i, X A_j Z^{-1}>.
      std::vector<RMat> xaz(static_cast<std::size_t>(m));
      for (Index j = 0; j < m; ++j) xaz[static_cast<std::size_t>(j)] = x * sp.a[static_cast<std::size_t>(j)] * zinv;
      RMat schur(m, m);
      for (Index i = 0; i < m; ++i)
        for (Index j = 0; j < m; ++j)
          schur(i, j) = sp.a[static_cast<std::size_t>(i)].cwiseProduct(xaz[static_cast<std::size_t>(j)].transpose()).sum();
      schur = 0.5 * (schur + schur.transpose());
      Eigen::LDLT<RMat> sfac(schur);
      if (sfac.info() != Eigen::Success) break;

      const RMat xrdz = x * rd * zinv;
      auto direction = [&](const RMat& r, RMat& dx, RVec& dy, RMat& dz) {
        const RVec rhs = rp - detail::apply_op(sp.a, r) + detail::apply_op(sp.a, xrdz);
        dy = sfac.solve(rhs);
        dz = rd - detail::apply_adjoint(sp.a, dy, n);
        dx = r - detail::sym(x * dz * zinv);
      };

      RMat dx, dz;
      RVec dy;
      direction(-x, dx, dy, dz);
      const double ap_aff = detail::step_to_boundary(x, dx, 1.0);
      const double ad_aff = detail::step_to_boundary(z, dz, 1.0);
      const double mu_aff = detail::frob_dot(x + ap_aff * dx, z + ad_aff * dz) / static_cast<double>(n);
      double sigma = std::pow(std::max(0.0, mu_aff) / mu, 3.0);
      sigma = std::clamp(sigma, 0.0, 1.0);

      const RMat corr = sigma * mu * zinv - x - detail::sym(dx * dz * zinv);
      direction(corr, dx, dy, dz);
      if (!dx.allFinite() || !dy.allFinite() || !dz.allFinite()) break;

      const double ap = detail::step_to_boundary(x, dx, o.ipm_step_fraction);
      const double ad = detail::step_to_boundary(z, dz, o.ipm_step_fraction);
      if (ap < 1e-12 && ad < 1e-12) {
        if (++stalls > 2) break;
      }
      x = detail::sym(x + ap * dx);
      y += ad * dy;
      z = detail::sym(z + ad * dz);
    }
    record(o.ipm_max_iters);
    return best;
  }
};

/// ADMM on  min -<C,X>  s.t.  X in {A(X) = b},  X = Z,  Z >= 0  with
/// over-relaxation and residual-balancing penalty updates. Each iteration is
/// one affine projection and one PSD-cone projection.
class SplittingSolver final : public SdpSolver {
 public:
  std::string_view name() const override { return "splitting"; }

  ConicSolution solve(const ConicProgram& prob) const override {
    prob.validate();
    const auto& o = prob.options;
    const Index n = prob.dim;
    const detail::ScaledProgram sp = detail::equilibrate(prob);
    const Index m = static_cast<Index>(sp.a.size());
    // Scaled objective in maximization form.
    const RMat c = -sp.c;

    RMat gram(m, m);
    for (Index i = 0; i < m; ++i)
      for (Index j = 0; j < m; ++j) gram(i, j) = detail::frob_dot(sp.a[static_cast<std::size_t>(i)], sp.a[static_cast<std::size_t>(j)]);
    Eigen::LLT<RMat> gfac(gram);

    double rho = o.admm_rho;
    const double alpha = o.admm_relaxation;
    RMat zc = RMat::Zero(n, n), u = RMat::Zero(n, n), x(n, n);
    RVec lambda = RVec::Zero(m);

    ConicSolution best;
    best.solver = std::string(name());
    double best_merit = std::numeric_limits<double>::infinity();
    auto record = [&](int it) {
      ConicSolution cand;
      cand.solver = best.solver;
      cand.iterations = it;
      cand.x = zc;
      cand.y = RVec::Zero(static_cast<Index>(prob.a.size()));
      for (Index r = 0; r < m; ++r)
        cand.y(sp.kept[static_cast<std::size_t>(r)]) = rho * lambda(r) * sp.row_scale(r) * sp.c_scale;
      cand.z = psd_project(detail::apply_adjoint(prob.a, cand.y, n) - prob.c);
      detail::assess(prob, cand);
      const double mer = detail::merit(prob, cand);
      if (cand.status != SolveStatus::NumericalFailure && (mer < best_merit || cand.status == SolveStatus::Optimal)) {
        best_merit = mer;
        best = std::move(cand);
      }
      return best.status == SolveStatus::Optimal;
    };

    for (int it = 1; it <= o.max_iters; ++it) {
      const RMat yv = zc - u + c / rho;
      lambda = gfac.solve(detail::apply_op(sp.a, yv) - sp.b);
      x = yv - detail::apply_adjoint(sp.a, lambda, n);
      const RMat zold = zc;
      const RMat xh = alpha * x + (1.0 - alpha) * zold;
      zc = psd_project(xh + u);
      u += xh - zc;
      if (!zc.allFinite() || !u.allFinite()) break;

      if (it % o.admm_check_every == 0) {
        if (record(it)) return best;
        const double rp = (x - zc).norm();
        const double rd = rho * (zc - zold).norm();
        if (rp > 10.0 * rd) {
          rho *= 2.0;
          u *= 0.5;
        } else if (rd > 10.0 * rp) {
          rho *= 0.5;
          u *= 2.0;
        }
      }
    }
    record(o.max_iters);
    return best;
  }
};

inline ConicSolution solve_sdp(const ConicProgram& prob) { return InteriorPointSolver{}.solve(prob); }

inline std::unique_ptr<SdpSolver> make_solver(std::string_view name) {
  if (name == "ipm" || name == "interior-point") return std::make_unique<InteriorPointSolver>();
  if (name == "admm" || name == "splitting") return std::make_unique<SplittingSolver>();
  fail(ErrorCode::InvalidArgument, "unknown SDP solver '" + std::string(name) + "'");
}

}  // namespace risbound
