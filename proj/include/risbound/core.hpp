#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace risbound {

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;
using Index = Eigen::Index;

inline constexpr cplx kJ{0.0, 1.0};

enum class ErrorCode {
  InvalidArgument,
  InvalidModel,
  SingularResolvent,
  SingularUpdate,
  InvalidNoise,
  ZeroGaugeEntry,
  IllConditionedMobius,
  ForbiddenPole,
  NonContractiveM,
  NotUnitModulusLoads,
  NotContractive,
  DegenerateAchiever,
  SolverNotConverged,
  NumericalFailure,
  ZeroMatrix,
  DegenerateDenominator,
  TooLarge,
  ParseError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidModel: return "InvalidModel";
    case ErrorCode::SingularResolvent: return "SingularResolvent";
    case ErrorCode::SingularUpdate: return "SingularUpdate";
    case ErrorCode::InvalidNoise: return "InvalidNoise";
    case ErrorCode::ZeroGaugeEntry: return "ZeroGaugeEntry";
    case ErrorCode::IllConditionedMobius: return "IllConditionedMobius";
    case ErrorCode::ForbiddenPole: return "ForbiddenPole";
    case ErrorCode::NonContractiveM: return "NonContractiveM";
    case ErrorCode::NotUnitModulusLoads: return "NotUnitModulusLoads";
    case ErrorCode::NotContractive: return "NotContractive";
    case ErrorCode::DegenerateAchiever: return "DegenerateAchiever";
    case ErrorCode::SolverNotConverged: return "SolverNotConverged";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::ZeroMatrix: return "ZeroMatrix";
    case ErrorCode::DegenerateDenominator: return "DegenerateDenominator";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

// Small numeric helpers shared across modules.
namespace detail {

inline double spectral_norm(const CMat& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<CMat> svd(m);
  return svd.singularValues()(0);
}

/// 2-norm condition number; infinity for a singular matrix.
inline double condition_number(const CMat& m) {
  if (m.size() == 0) return 1.0;
  Eigen::JacobiSVD<CMat> svd(m);
  const auto& s = svd.singularValues();
  const double smin = s(s.size() - 1);
  if (smin <= 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / smin;
}

inline bool all_finite(const CMat& m) { return m.allFinite(); }
inline bool is_finite(cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

inline double rel_diff(cplx a, cplx b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace detail

}  // namespace risbound
