#pragma once

// Reparametrizations of the model that leave every realizable channel h(v)
// unchanged: diagonal similarity, complex scaling and the Moebius change of
// scattering reference, plus their composition in that fixed order.

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "risbound/core.hpp"
#include "risbound/mnt.hpp"

namespace risbound {

struct GaugeParameters {
  CVec d;               // diagonal-similarity parameters, all non-zero
  cplx c{1.0, 0.0};     // complex scaling, non-zero
  cplx m{0.0, 0.0};     // Moebius parameter, |m| < 1

  static GaugeParameters identity(Index n_s) { return {CVec::Ones(n_s), cplx{1.0}, cplx{0.0}}; }
};

enum class GaugeStage { DiagonalSimilarity, ComplexScaling, Mobius };

inline std::string_view to_string(GaugeStage s) {
  switch (s) {
    case GaugeStage::DiagonalSimilarity: return "diagonal-similarity";
    case GaugeStage::ComplexScaling: return "complex-scaling";
    case GaugeStage::Mobius: return "mobius";
  }
  return "unknown";
}

/// Stage failure inside a composite gauge; keeps the original error code.
class GaugeError : public Error {
 public:
  GaugeError(const Error& inner, GaugeStage stage)
      : Error(inner.code(), std::string("stage ") + std::string(to_string(stage)) + ": " + inner.what()), stage_(stage) {}
  GaugeStage stage() const noexcept { return stage_; }

 private:
  GaugeStage stage_;
};

struct GaugeOptions {
  double mobius_cond_cap = 1e10;
  double pole_tol = 1e-12;
};

/// a~^T = a^T D^{-1}, b~ = D b, Gamma~ = D Gamma D^{-1}; loads and h0 untouched.
inline ModelParameters apply_diagonal_similarity(const ModelParameters& th, const CVec& d) {
  if (d.size() != th.n_s()) fail(ErrorCode::InvalidArgument, "d must have length n_s");
  for (Index i = 0; i < d.size(); ++i)
    if (d(i) == cplx{0.0}) fail(ErrorCode::ZeroGaugeEntry, "d[" + std::to_string(i) + "] is zero");
  const CVec dinv = d.cwiseInverse();
  CVec a = th.a().cwiseProduct(dinv);
  CVec b = th.b().cwiseProduct(d);
  CMat g = d.asDiagonal() * th.gamma() * dinv.asDiagonal();
  return ModelParameters(th.alpha(), th.beta(), th.h0(), std::move(a), std::move(b), std::move(g));
}

/// alpha~ = c alpha, beta~ = c beta, a~ = a / c, Gamma~ = Gamma / c.
inline ModelParameters apply_complex_scaling(const ModelParameters& th, cplx c) {
  if (c == cplx{0.0}) fail(ErrorCode::ZeroGaugeEntry, "c is zero");
  return ModelParameters(c * th.alpha(), c * th.beta(), th.h0(), th.a() / c, th.b(), th.gamma() / c);
}

inline cplx mobius_map(cplx rho, cplx m) { return (rho - m) / (1.0 - std::conj(m) * rho); }

/// With F = (I - m Gamma)^{-1} and k = sqrt(1 - |m|^2):
///   rho~ = (rho - m) / (1 - m* rho), h0~ = h0 + m a^T F b,
///   a~^T = k a^T F, b~ = k F b, Gamma~ = (Gamma - m* I) F.
inline ModelParameters apply_mobius(const ModelParameters& th, cplx m, const GaugeOptions& opts = {}) {
  for (cplx rho : {th.alpha(), th.beta()})
    if (std::abs(1.0 - std::conj(m) * rho) <= opts.pole_tol)
      fail(ErrorCode::ForbiddenPole, "m coincides with 1/conj(rho) for a load value");
  if (!(std::abs(m) < 1.0)) fail(ErrorCode::NonContractiveM, "|m| must be < 1");
  if (m == cplx{0.0}) return th;

  CMat sys = -m * th.gamma();
  sys.diagonal().array() += 1.0;
  const double cond = detail::condition_number(sys);
  if (!(cond <= opts.mobius_cond_cap))
    fail(ErrorCode::IllConditionedMobius, "cond(I - m Gamma) = " + std::to_string(cond));
  const CMat f = sys.partialPivLu().inverse();
  const double k = std::sqrt(1.0 - std::norm(m));

  const CVec fb = f * th.b();
  const cplx h0 = th.h0() + m * th.a().cwiseProduct(fb).sum();
  CVec a = k * (f.transpose() * th.a());
  CVec b = k * fb;
  CMat g = th.gamma();
  g.diagonal().array() -= std::conj(m);
  g = g * f;
  return ModelParameters(mobius_map(th.alpha(), m), mobius_map(th.beta(), m), h0, std::move(a), std::move(b),
                         std::move(g));
}

/// theta~ = g(theta; phi): diagonal similarity, then complex scaling, then
/// Moebius. Every stage must be admissible on its partially transformed input.
inline ModelParameters apply_gauge(const ModelParameters& th, const GaugeParameters& phi, const GaugeOptions& opts = {}) {
  GaugeStage stage = GaugeStage::DiagonalSimilarity;
  try {
    ModelParameters out = apply_diagonal_similarity(th, phi.d);
    stage = GaugeStage::ComplexScaling;
    out = apply_complex_scaling(out, phi.c);
    stage = GaugeStage::Mobius;
    return apply_mobius(out, phi.m, opts);
  } catch (const GaugeError&) {
    throw;
  } catch (const Error& e) {
    throw GaugeError(e, stage);
  }
}

/// Status of every precondition of the composite gauge, evaluated stage-wise.
struct GaugeDiagnostics {
  bool zero_gauge_entry = false;
  bool zero_scaling = false;
  bool non_contractive_m = false;
  bool forbidden_pole = false;
  bool ill_conditioned_mobius = false;
  double min_abs_d = std::numeric_limits<double>::quiet_NaN();
  double abs_c = std::numeric_limits<double>::quiet_NaN();
  double abs_m = std::numeric_limits<double>::quiet_NaN();
  double pole_distance = std::numeric_limits<double>::quiet_NaN();  // min |1 - m* rho|
  double mobius_condition = std::numeric_limits<double>::quiet_NaN();

  bool admissible() const {
    return !zero_gauge_entry && !zero_scaling && !non_contractive_m && !forbidden_pole && !ill_conditioned_mobius;
  }

  std::vector<std::string> failures() const {
    std::vector<std::string> out;
    if (zero_gauge_entry) out.emplace_back("ZeroGaugeEntry");
    if (zero_scaling) out.emplace_back("ZeroScaling");
    if (non_contractive_m) out.emplace_back("NonContractiveM");
    if (forbidden_pole) out.emplace_back("ForbiddenPole");
    if (ill_conditioned_mobius) out.emplace_back("IllConditionedMobius");
    return out;
  }
};

inline GaugeDiagnostics gauge_admissible(const ModelParameters& th, const GaugeParameters& phi, const GaugeOptions& opts = {}) {
  GaugeDiagnostics diag;
  if (phi.d.size() != th.n_s()) {
    diag.zero_gauge_entry = true;
    return diag;
  }
  diag.min_abs_d = phi.d.size() ? phi.d.cwiseAbs().minCoeff() : 1.0;
  diag.zero_gauge_entry = !(diag.min_abs_d > 0.0);
  diag.abs_c = std::abs(phi.c);
  diag.zero_scaling = !(diag.abs_c > 0.0);
  diag.abs_m = std::abs(phi.m);
  diag.non_contractive_m = !(diag.abs_m < 1.0);

  // The Moebius stage sees the loads after scaling and Gamma after both
  // earlier stages; fall back to the raw values when an earlier stage fails.
  const cplx alpha = diag.zero_scaling ? th.alpha() : phi.c * th.alpha();
  const cplx beta = diag.zero_scaling ? th.beta() : phi.c * th.beta();
  diag.pole_distance = std::min(std::abs(1.0 - std::conj(phi.m) * alpha), std::abs(1.0 - std::conj(phi.m) * beta));
  diag.forbidden_pole = !(diag.pole_distance > opts.pole_tol);

  if (!diag.zero_gauge_entry && !diag.zero_scaling) {
    const CVec dinv = phi.d.cwiseInverse();
    const CMat g = (phi.d.asDiagonal() * th.gamma() * dinv.asDiagonal()) / phi.c;
    CMat sys = -phi.m * g;
    sys.diagonal().array() += 1.0;
    diag.mobius_condition = detail::condition_number(sys);
    diag.ill_conditioned_mobius = !(diag.mobius_condition <= opts.mobius_cond_cap);
  }
  return diag;
}

}  // namespace risbound
