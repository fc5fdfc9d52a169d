#pragma once

// Synthetic passive scenarios, the three load sets, the model file format and
// result writers (CSV and JSON).

#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "risbound/core.hpp"
#include "risbound/mnt.hpp"

namespace risbound {

enum class DirectPath { Zero, Random };

struct ScenarioSpec {
  Index n_s = 4;
  std::uint64_t seed = 0;
  double max_singular_value = 0.95;
  bool reciprocal = false;
  double coupling_scale = 1.0;
  DirectPath direct_path = DirectPath::Random;
  cplx alpha{-1.0, 0.0};
  cplx beta{1.0, 0.0};

  void validate() const {
    if (n_s < 1) fail(ErrorCode::InvalidArgument, "n_s must be positive");
    if (!(max_singular_value > 0.0 && max_singular_value < 1.0))
      fail(ErrorCode::InvalidArgument, "max_singular_value must lie in (0, 1)");
    if (!(coupling_scale >= 0.0) || !std::isfinite(coupling_scale))
      fail(ErrorCode::InvalidArgument, "coupling_scale must be finite and non-negative");
  }
};

struct LoadSet {
  std::string name;
  cplx alpha;
  cplx beta;

  bool unit_modulus(double tol = 1e-9) const {
    return std::abs(std::abs(alpha) - 1.0) <= tol && std::abs(std::abs(beta) - 1.0) <= tol;
  }
};

/// "PM" (short/open), "PIN" (diode data sheet) or "01" (matched/open);
/// case-insensitive.
inline LoadSet load_set(std::string name) {
  for (auto& ch : name) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  if (name == "PM") return {"PM", {-1.0, 0.0}, {1.0, 0.0}};
  if (name == "PIN") return {"PIN", {0.6366, -0.7712}, {-0.8116, 0.0}};
  if (name == "01") return {"01", {0.0, 0.0}, {1.0, 0.0}};
  fail(ErrorCode::InvalidArgument, "unknown load set '" + name + "' (expected PM, PIN or 01)");
}

namespace detail {

inline CMat gaussian_matrix(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, std::sqrt(0.5));
  CMat g(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) g(i, j) = cplx{nd(rng), nd(rng)};
  return g;
}

// Haar-distributed unitary: QR of a Gaussian matrix with the phases of R's
// diagonal absorbed into Q.
inline CMat haar_unitary(Index n, std::mt19937_64& rng) {
  Eigen::HouseholderQR<CMat> qr(gaussian_matrix(n, n, rng));
  CMat q = qr.householderQ() * CMat::Identity(n, n);
  const CMat r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < n; ++j) {
    const double mag = std::abs(r(j, j));
    if (mag > 0.0) q.col(j) *= r(j, j) / mag;
  }
  return q;
}

}  // namespace detail

/// Full (2 + n_s)-port scattering matrix with ports T = 0, R = 1 and the
/// elements after them. Every singular value ends up <= max_singular_value.
inline CMat generate_scattering(const ScenarioSpec& spec) {
  spec.validate();
  const Index n = spec.n_s + 2;
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  RVec sv(n);
  for (Index i = 0; i < n; ++i) sv(i) = 1.0 - unif(rng);  // (0, 1]
  sv *= spec.max_singular_value / sv.maxCoeff();

  CMat s;
  if (spec.reciprocal) {
    const CMat u = detail::haar_unitary(n, rng);
    s = u * sv.cast<cplx>().asDiagonal() * u.transpose();
    s = 0.5 * (s + s.transpose()).eval();
  } else {
    const CMat u = detail::haar_unitary(n, rng);
    const CMat v = detail::haar_unitary(n, rng);
    s = u * sv.cast<cplx>().asDiagonal() * v.adjoint();
  }

  if (spec.direct_path == DirectPath::Zero) {
    s(1, 0) = 0.0;
    if (spec.reciprocal) s(0, 1) = 0.0;
  }
  if (spec.coupling_scale != 1.0)
    for (Index i = 2; i < n; ++i)
      for (Index j = 2; j < n; ++j)
        if (i != j) s(i, j) *= spec.coupling_scale;
  const double smax = detail::spectral_norm(s);
  if (smax > spec.max_singular_value) s *= spec.max_singular_value / smax;
  return s;
}

inline ModelParameters model_from_scattering(const CMat& s, cplx alpha, cplx beta) {
  const Index n = s.rows() - 2;
  if (n < 1 || s.cols() != s.rows()) fail(ErrorCode::InvalidArgument, "scattering matrix must be square with at least 3 ports");
  return ModelParameters(alpha, beta, s(1, 0), s.block(1, 2, 1, n).transpose(), s.block(2, 0, n, 1),
                         s.block(2, 2, n, n));
}

inline ModelParameters generate_scenario(const ScenarioSpec& spec) {
  return model_from_scattering(generate_scattering(spec), spec.alpha, spec.beta);
}

// ---------------------------------------------------------------------------
// Model files

namespace detail {

using nlohmann::json;

inline json cplx_json(cplx z) { return json::array({z.real(), z.imag()}); }

inline int line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

// Line of the first occurrence of "key" in the document, 0 if not found.
inline int line_of_key(const std::string& text, const std::string& key) {
  const auto pos = text.find("\"" + key + "\"");
  return pos == std::string::npos ? 0 : line_of_offset(text, pos);
}

class ModelReader {
 public:
  ModelReader(const std::string& text, std::string source) : text_(text), source_(std::move(source)) {}

  [[noreturn]] void error(const std::string& field, const std::string& msg) const {
    std::string where = source_;
    const int line = field.empty() ? 0 : line_of_key(text_, field);
    if (line > 0) where += ":" + std::to_string(line);
    fail(ErrorCode::ParseError, where + ": field '" + field + "': " + msg);
  }

  const json& get(const json& doc, const std::string& field) const {
    if (!doc.contains(field)) error(field, "missing");
    return doc.at(field);
  }

  cplx complex(const json& j, const std::string& field) const {
    if (j.is_number()) return check(field, cplx{j.get<double>(), 0.0});
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
      error(field, "expected a complex number [re, im]");
    return check(field, cplx{j[0].get<double>(), j[1].get<double>()});
  }

  CVec vector(const json& j, const std::string& field) const {
    if (!j.is_array()) error(field, "expected an array");
    CVec v(static_cast<Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i)
      v(static_cast<Index>(i)) = complex(j[i], field + "[" + std::to_string(i) + "]");
    return v;
  }

 private:
  cplx check(const std::string& field, cplx z) const {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) error(field, "non-finite entry");
    return z;
  }

  const std::string& text_;
  std::string source_;
};

}  // namespace detail

inline std::string model_to_json(const ModelParameters& m) {
  using detail::cplx_json;
  nlohmann::ordered_json doc;
  doc["n_s"] = m.n_s();
  doc["alpha"] = cplx_json(m.alpha());
  doc["beta"] = cplx_json(m.beta());
  doc["h0"] = cplx_json(m.h0());
  auto vec = [](const CVec& v) {
    auto arr = nlohmann::json::array();
    for (Index i = 0; i < v.size(); ++i) arr.push_back(cplx_json(v(i)));
    return arr;
  };
  doc["a"] = vec(m.a());
  doc["b"] = vec(m.b());
  auto rows = nlohmann::json::array();
  for (Index i = 0; i < m.n_s(); ++i) rows.push_back(vec(m.gamma().row(i).transpose()));
  doc["gamma"] = rows;
  return doc.dump(2) + "\n";
}

inline ModelParameters model_from_json(const std::string& text, const std::string& source = "<model>") {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::ParseError,
         source + ":" + std::to_string(detail::line_of_offset(text, e.byte > 0 ? e.byte - 1 : 0)) + ": " + e.what());
  } catch (const json::out_of_range& e) {
    // Overflowing numbers carry no offset; locate the quoted token instead.
    const std::string what = e.what();
    const auto q0 = what.find('\''), q1 = what.rfind('\'');
    std::size_t at = 0;
    if (q0 != std::string::npos && q1 > q0) at = text.find(what.substr(q0 + 1, q1 - q0 - 1));
    fail(ErrorCode::ParseError,
         source + ":" + std::to_string(detail::line_of_offset(text, at == std::string::npos ? 0 : at)) + ": " + what);
  }
  detail::ModelReader rd(text, source);
  if (!doc.is_object()) rd.error("", "top level must be an object");

  const json& ns = rd.get(doc, "n_s");
  if (!ns.is_number_integer() || ns.get<long long>() < 1) rd.error("n_s", "expected a positive integer");
  const Index n = static_cast<Index>(ns.get<long long>());
  const cplx alpha = rd.complex(rd.get(doc, "alpha"), "alpha");
  const cplx beta = rd.complex(rd.get(doc, "beta"), "beta");
  const cplx h0 = rd.complex(rd.get(doc, "h0"), "h0");
  CVec a = rd.vector(rd.get(doc, "a"), "a");
  CVec b = rd.vector(rd.get(doc, "b"), "b");
  if (a.size() != n) rd.error("a", "length " + std::to_string(a.size()) + " does not match n_s = " + std::to_string(n));
  if (b.size() != n) rd.error("b", "length " + std::to_string(b.size()) + " does not match n_s = " + std::to_string(n));
  const json& g = rd.get(doc, "gamma");
  if (!g.is_array() || static_cast<Index>(g.size()) != n)
    rd.error("gamma", "expected " + std::to_string(n) + " rows");
  CMat gamma(n, n);
  for (Index i = 0; i < n; ++i) {
    const CVec row = rd.vector(g[static_cast<std::size_t>(i)], "gamma[" + std::to_string(i) + "]");
    if (row.size() != n)
      rd.error("gamma", "row " + std::to_string(i) + " has " + std::to_string(row.size()) + " entries, expected " +
                            std::to_string(n));
    gamma.row(i) = row.transpose();
  }
  return ModelParameters(alpha, beta, h0, std::move(a), std::move(b), std::move(gamma));
}

inline void save_model(const ModelParameters& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::InvalidArgument, "cannot write " + path);
  out << model_to_json(m);
  if (!out) fail(ErrorCode::InvalidArgument, "write failed for " + path);
}

inline ModelParameters load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ParseError, path + ": cannot open");
  std::stringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str(), path);
}

// ---------------------------------------------------------------------------
// Results

struct ResultRow {
  std::string scenario;
  Index n_s = 0;
  std::string load_set;
  std::string method;  // bound kind or optimizer name
  double value = std::numeric_limits<double>::quiet_NaN();  // bound or |h|^2
  double capacity = std::numeric_limits<double>::quiet_NaN();
  bool valid = false;
  double runtime = std::numeric_limits<double>::quiet_NaN();  // seconds
  std::uint64_t seed = 0;
  std::string note;
  std::string configuration;  // optimizer output, empty for bounds
};

namespace detail {

inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace detail

struct CsvOptions {
  bool runtime = true;
};

inline std::string to_csv(const std::vector<ResultRow>& rows, const CsvOptions& opts = {}) {
  std::ostringstream os;
  os << "scenario,n_s,load_set,method,value,capacity,valid";
  if (opts.runtime) os << ",runtime";
  os << ",seed,configuration,note\n";
  for (const auto& r : rows) {
    os << detail::csv_escape(r.scenario) << ',' << r.n_s << ',' << detail::csv_escape(r.load_set) << ','
       << detail::csv_escape(r.method) << ',' << detail::format_double(r.value) << ','
       << detail::format_double(r.capacity) << ',' << (r.valid ? "true" : "false");
    if (opts.runtime) os << ',' << detail::format_double(r.runtime);
    os << ',' << r.seed << ',' << r.configuration << ',' << detail::csv_escape(r.note) << '\n';
  }
  return os.str();
}

inline nlohmann::ordered_json to_json(const std::vector<ResultRow>& rows, const CsvOptions& opts = {}) {
  auto num = [](double x) -> nlohmann::ordered_json {
    if (std::isfinite(x)) return x;
    return nullptr;
  };
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json j;
    j["scenario"] = r.scenario;
    j["n_s"] = r.n_s;
    j["load_set"] = r.load_set;
    j["method"] = r.method;
    j["value"] = num(r.value);
    j["capacity"] = num(r.capacity);
    j["valid"] = r.valid;
    if (opts.runtime) j["runtime"] = num(r.runtime);
    j["seed"] = r.seed;
    if (!r.configuration.empty()) j["configuration"] = r.configuration;
    if (!r.note.empty()) j["note"] = r.note;
    arr.push_back(std::move(j));
  }
  return arr;
}

}  // namespace risbound
