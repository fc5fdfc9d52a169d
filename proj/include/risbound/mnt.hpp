#pragma once

// Multiport-network channel model of a SISO link programmed by 1-bit
// tunable elements: parameter set, load encoding, channel evaluation,
// low-rank re-evaluation and model reduction.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "risbound/core.hpp"

namespace risbound {

/// Full parameter set theta = {alpha, beta, h0, a, b, Gamma}.
///
/// The reference impedance of the underlying scattering description is a
/// documentation constant only; the channel is a normalized power-wave ratio.
/// No passivity is enforced here; operations that need it check it.
class ModelParameters {
 public:
  ModelParameters() = default;

  ModelParameters(cplx alpha, cplx beta, cplx h0, CVec a, CVec b, CMat gamma)
      : alpha_(alpha), beta_(beta), h0_(h0), a_(std::move(a)), b_(std::move(b)), gamma_(std::move(gamma)) {
    validate();
  }

  Index n_s() const noexcept { return a_.size(); }
  cplx alpha() const noexcept { return alpha_; }
  cplx beta() const noexcept { return beta_; }
  cplx h0() const noexcept { return h0_; }
  const CVec& a() const noexcept { return a_; }
  const CVec& b() const noexcept { return b_; }
  const CMat& gamma() const noexcept { return gamma_; }

  /// Same scattering description terminated by a different pair of loads.
  ModelParameters with_loads(cplx alpha, cplx beta) const {
    return ModelParameters(alpha, beta, h0_, a_, b_, gamma_);
  }

  friend bool operator==(const ModelParameters& x, const ModelParameters& y) {
    return x.alpha_ == y.alpha_ && x.beta_ == y.beta_ && x.h0_ == y.h0_ && x.a_.size() == y.a_.size() &&
           x.a_ == y.a_ && x.b_ == y.b_ && x.gamma_ == y.gamma_;
  }

 private:
  void validate() const {
    const Index n = a_.size();
    if (n < 1) fail(ErrorCode::InvalidModel, "n_s must be positive");
    if (b_.size() != n) fail(ErrorCode::InvalidModel, "b has length " + std::to_string(b_.size()) + ", expected " + std::to_string(n));
    if (gamma_.rows() != n || gamma_.cols() != n)
      fail(ErrorCode::InvalidModel, "gamma is " + std::to_string(gamma_.rows()) + "x" + std::to_string(gamma_.cols()) +
                                        ", expected " + std::to_string(n) + "x" + std::to_string(n));
    if (!detail::is_finite(alpha_) || !detail::is_finite(beta_) || !detail::is_finite(h0_) || !a_.allFinite() ||
        !b_.allFinite() || !gamma_.allFinite())
      fail(ErrorCode::InvalidModel, "non-finite model entry");
  }

  cplx alpha_{-1.0, 0.0};
  cplx beta_{1.0, 0.0};
  cplx h0_{0.0, 0.0};
  CVec a_;
  CVec b_;
  CMat gamma_;
};

/// Binary configuration; bit i selects alpha (0) or beta (1) at element i.
class ControlVector {
 public:
  ControlVector() = default;
  explicit ControlVector(std::size_t n) : bits_(n, 0) {}
  explicit ControlVector(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
    for (auto v : bits_)
      if (v > 1) fail(ErrorCode::InvalidArgument, "control bits must be 0 or 1");
  }
  ControlVector(std::initializer_list<int> bits) {
    bits_.reserve(bits.size());
    for (int v : bits) {
      if (v != 0 && v != 1) fail(ErrorCode::InvalidArgument, "control bits must be 0 or 1");
      bits_.push_back(static_cast<std::uint8_t>(v));
    }
  }

  /// Bit i of `mask` becomes entry i.
  static ControlVector from_mask(std::uint64_t mask, std::size_t n) {
    ControlVector v(n);
    for (std::size_t i = 0; i < n; ++i) v.bits_[i] = static_cast<std::uint8_t>((mask >> i) & 1U);
    return v;
  }

  std::uint64_t to_mask() const {
    std::uint64_t m = 0;
    for (std::size_t i = 0; i < bits_.size() && i < 64; ++i) m |= std::uint64_t{bits_[i]} << i;
    return m;
  }

  std::size_t size() const noexcept { return bits_.size(); }
  std::uint8_t operator[](std::size_t i) const { return bits_[i]; }
  void set(std::size_t i, bool on) { bits_.at(i) = on ? 1 : 0; }
  void flip(std::size_t i) { bits_.at(i) ^= 1; }
  const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }

  std::string str() const {
    std::string s;
    s.reserve(bits_.size());
    for (auto v : bits_) s.push_back(v ? '1' : '0');
    return s;
  }

  friend bool operator==(const ControlVector&, const ControlVector&) = default;
  /// Lexicographic order on (v_0, v_1, ...).
  friend bool operator<(const ControlVector& x, const ControlVector& y) { return x.bits_ < y.bits_; }

 private:
  std::vector<std::uint8_t> bits_;
};

using LoadVector = CVec;

struct EvalOptions {
  double cond_cap = 1e12;
};

/// r = alpha * 1 + (beta - alpha) * v.
inline LoadVector encode_loads(const ControlVector& v, cplx alpha, cplx beta) {
  LoadVector r(static_cast<Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) r(static_cast<Index>(i)) = v[i] ? beta : alpha;
  return r;
}

namespace detail {

inline cplx resolvent_channel(const ModelParameters& m, const CMat& phi, const EvalOptions& opts) {
  const Index n = m.n_s();
  const CMat sys = CMat::Identity(n, n) - phi * m.gamma();
  Eigen::PartialPivLU<CMat> lu(sys);
  const double rc = lu.rcond();
  if (!(rc > 1.0 / opts.cond_cap))
    fail(ErrorCode::SingularResolvent, "I - Phi*Gamma is singular or ill-conditioned (rcond=" + std::to_string(rc) + ")");
  const CVec x = lu.solve(phi * m.b());
  if (!x.allFinite()) fail(ErrorCode::SingularResolvent, "non-finite resolvent solution");
  return m.h0() + m.a().cwiseProduct(x).sum();
}

}  // namespace detail

/// h = h0 + a^T (I - diag(r) Gamma)^{-1} diag(r) b.
inline cplx channel_gain(const ModelParameters& m, const LoadVector& r, const EvalOptions& opts = {}) {
  if (r.size() != m.n_s()) fail(ErrorCode::InvalidArgument, "load vector length does not match n_s");
  const Index n = m.n_s();
  CMat phi = CMat::Zero(n, n);
  phi.diagonal() = r;
  return detail::resolvent_channel(m, phi, opts);
}

inline cplx channel_gain(const ModelParameters& m, const ControlVector& v, const EvalOptions& opts = {}) {
  if (static_cast<Index>(v.size()) != m.n_s()) fail(ErrorCode::InvalidArgument, "control vector length does not match n_s");
  return channel_gain(m, encode_loads(v, m.alpha(), m.beta()), opts);
}

/// Same model with a general (beyond-diagonal) load network Phi.
inline cplx channel_gain_full(const ModelParameters& m, const CMat& phi, const EvalOptions& opts = {}) {
  if (phi.rows() != m.n_s() || phi.cols() != m.n_s()) fail(ErrorCode::InvalidArgument, "Phi must be n_s x n_s");
  return detail::resolvent_channel(m, phi, opts);
}

inline double power_gain(cplx h) { return std::norm(h); }

/// Reference resolvent state at a configuration v_ref. With A = I - Phi_ref*Gamma
/// and P = A^{-1}, flipping a set F of k bits is a rank-k change of Phi and
/// the channel follows from one k x k capacitance solve:
///   h' = h0 + w^T s - w_F C^{-1} V P s,  C = I - Delta (Gamma P)_{FF}
/// where w^T = a^T P and Delta holds the per-element load changes.
class BaselineFactorization {
 public:
  const ControlVector& reference() const noexcept { return v_ref_; }
  cplx reference_channel() const noexcept { return h_ref_; }
  Index n_s() const noexcept { return x_ref_.size(); }

 private:
  friend BaselineFactorization prepare_baseline(const ModelParameters&, const ControlVector&, const EvalOptions&);
  friend cplx woodbury_channel(const BaselineFactorization&, std::span<const Index>);

  ControlVector v_ref_;
  cplx alpha_, beta_, h0_;
  CVec b_;
  CVec x_ref_;         // P Phi_ref b
  CVec gamma_x_ref_;   // Gamma x_ref
  CVec a_p_;           // (a^T P)^T
  CMat gamma_p_;       // Gamma P
  CMat p_;             // P
  cplx h_ref_;
};

inline BaselineFactorization prepare_baseline(const ModelParameters& m, const ControlVector& v_ref,
                                              const EvalOptions& opts = {}) {
  const Index n = m.n_s();
  if (static_cast<Index>(v_ref.size()) != n) fail(ErrorCode::InvalidArgument, "reference configuration length does not match n_s");
  const LoadVector r = encode_loads(v_ref, m.alpha(), m.beta());
  CMat sys = -(r.asDiagonal() * m.gamma());
  sys.diagonal().array() += 1.0;
  Eigen::PartialPivLU<CMat> lu(sys);
  if (!(lu.rcond() > 1.0 / opts.cond_cap)) fail(ErrorCode::SingularResolvent, "baseline resolvent is singular or ill-conditioned");

  BaselineFactorization base;
  base.v_ref_ = v_ref;
  base.alpha_ = m.alpha();
  base.beta_ = m.beta();
  base.h0_ = m.h0();
  base.b_ = m.b();
  base.p_ = lu.inverse();
  base.x_ref_ = base.p_ * r.cwiseProduct(m.b());
  base.gamma_x_ref_ = m.gamma() * base.x_ref_;
  base.a_p_ = base.p_.transpose() * m.a();
  base.gamma_p_ = m.gamma() * base.p_;
  base.h_ref_ = m.h0() + (m.a().transpose() * base.x_ref_)(0);
  return base;
}

/// Channel at v_ref with the listed bits flipped; solves a |flips| x |flips| system.
inline cplx woodbury_channel(const BaselineFactorization& base, std::span<const Index> flips) {
  const Index k = static_cast<Index>(flips.size());
  if (k == 0) return base.h_ref_;
  const Index n = base.n_s();

  CVec delta(k);
  CVec pb(k);  // Delta b_F
  for (Index j = 0; j < k; ++j) {
    const Index i = flips[static_cast<std::size_t>(j)];
    if (i < 0 || i >= n) fail(ErrorCode::InvalidArgument, "flip index out of range");
    for (Index l = 0; l < j; ++l)
      if (flips[static_cast<std::size_t>(l)] == i) fail(ErrorCode::InvalidArgument, "duplicate flip index");
    delta(j) = base.v_ref_[static_cast<std::size_t>(i)] ? (base.alpha_ - base.beta_) : (base.beta_ - base.alpha_);
    pb(j) = delta(j) * base.b_(i);
  }

  // P s = x_ref + P_{:,F} Delta b_F ;  (Gamma P s)_F = (Gamma x_ref)_F + (Gamma P)_{FF} Delta b_F
  CMat cap(k, k);
  CVec gps(k);
  cplx wps = base.h_ref_ - base.h0_;
  CVec wf(k);
  for (Index r = 0; r < k; ++r) {
    const Index ir = flips[static_cast<std::size_t>(r)];
    wf(r) = base.a_p_(ir);
    wps += base.a_p_(ir) * pb(r);
    cplx acc = base.gamma_x_ref_(ir);
    for (Index c = 0; c < k; ++c) {
      const Index ic = flips[static_cast<std::size_t>(c)];
      const cplx gp = base.gamma_p_(ir, ic);
      acc += gp * pb(c);
      cap(r, c) = (r == c ? cplx{1.0} : cplx{0.0}) - delta(r) * gp;
    }
    gps(r) = acc;
  }
  // V P s with V = -Delta Gamma_{F,:}
  const CVec vps = -(delta.cwiseProduct(gps));
  Eigen::PartialPivLU<CMat> lu(cap);
  if (!(lu.rcond() > 1e-13)) fail(ErrorCode::SingularUpdate, "capacitance system is singular");
  const CVec corr = lu.solve(vps);
  if (!corr.allFinite()) fail(ErrorCode::SingularUpdate, "non-finite capacitance solution");
  return base.h0_ + wps - (wf.transpose() * corr)(0);
}

inline cplx woodbury_channel(const BaselineFactorization& base, std::initializer_list<Index> flips) {
  return woodbury_channel(base, std::span<const Index>(flips.begin(), flips.size()));
}

enum class FixedState { Alpha, Beta };

/// Folds the inactive elements (loads fixed to alpha or beta) into an
/// equivalent model over the active elements, preserving their order:
///   K   = (I - rho Gamma_22)^{-1} rho
///   h0' = h0 + a_2^T K b_2
///   a'  = a_1 + Gamma_21^T K^T a_2
///   b'  = b_1 + Gamma_12 K b_2
///   G'  = Gamma_11 + Gamma_12 K Gamma_21
inline ModelParameters reduce_model(const ModelParameters& m, std::span<const Index> active, FixedState fixed,
                                    const EvalOptions& opts = {}) {
  const Index n = m.n_s();
  std::vector<char> used(static_cast<std::size_t>(n), 0);
  for (Index i : active) {
    if (i < 0 || i >= n) fail(ErrorCode::InvalidArgument, "active index out of range");
    if (used[static_cast<std::size_t>(i)]) fail(ErrorCode::InvalidArgument, "duplicate active index");
    used[static_cast<std::size_t>(i)] = 1;
  }
  const Index n1 = static_cast<Index>(active.size());
  if (n1 == 0) fail(ErrorCode::InvalidArgument, "active set must be non-empty");
  std::vector<Index> s1(active.begin(), active.end()), s2;
  for (Index i = 0; i < n; ++i)
    if (!used[static_cast<std::size_t>(i)]) s2.push_back(i);
  const Index n2 = static_cast<Index>(s2.size());

  auto sub = [&](const std::vector<Index>& rows, const std::vector<Index>& cols) {
    CMat out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (std::size_t c = 0; c < cols.size(); ++c) out(static_cast<Index>(r), static_cast<Index>(c)) = m.gamma()(rows[r], cols[c]);
    return out;
  };
  auto subv = [](const CVec& v, const std::vector<Index>& idx) {
    CVec out(static_cast<Index>(idx.size()));
    for (std::size_t r = 0; r < idx.size(); ++r) out(static_cast<Index>(r)) = v(idx[r]);
    return out;
  };

  CVec a1 = subv(m.a(), s1), b1 = subv(m.b(), s1);
  CMat g11 = sub(s1, s1);
  if (n2 == 0) return ModelParameters(m.alpha(), m.beta(), m.h0(), a1, b1, g11);

  const cplx rho = fixed == FixedState::Alpha ? m.alpha() : m.beta();
  const CVec a2 = subv(m.a(), s2), b2 = subv(m.b(), s2);
  const CMat g12 = sub(s1, s2), g21 = sub(s2, s1), g22 = sub(s2, s2);
  CMat sys = -rho * g22;
  sys.diagonal().array() += 1.0;
  Eigen::PartialPivLU<CMat> lu(sys);
  if (!(lu.rcond() > 1.0 / opts.cond_cap)) fail(ErrorCode::SingularResolvent, "inactive block resolvent is singular");
  const CVec kb2 = rho * lu.solve(b2);   // K b2
  const CMat kg21 = rho * lu.solve(g21); // K Gamma21

  const cplx h0r = m.h0() + (a2.transpose() * kb2)(0);
  const CVec ar = a1 + kg21.transpose() * a2;
  const CVec br = b1 + g12 * kb2;
  const CMat gr = g11 + g12 * kg21;
  return ModelParameters(m.alpha(), m.beta(), h0r, ar, br, gr);
}

inline ModelParameters reduce_model(const ModelParameters& m, std::initializer_list<Index> active, FixedState fixed) {
  return reduce_model(m, std::span<const Index>(active.begin(), active.size()), fixed);
}

/// C = log2(1 + (p_t / sigma2) |h|^2) in bit/s/Hz; powers in mW.
inline double shannon_capacity(cplx h, double p_t_mw, double sigma2_mw) {
  if (!(sigma2_mw > 0.0)) fail(ErrorCode::InvalidNoise, "noise power must be positive");
  if (!(p_t_mw > 0.0)) fail(ErrorCode::InvalidArgument, "transmit power must be positive");
  return std::log2(1.0 + (p_t_mw / sigma2_mw) * std::norm(h));
}

}  // namespace risbound
