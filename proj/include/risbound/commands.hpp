#pragma once

// Command implementations behind the command-line tool: scenario generation,
// bounds, optimizers, n_s sweeps and the property-based verification suite.

#include <algorithm>
#include <chrono>
#include <functional>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "risbound/bounds.hpp"
#include "risbound/core.hpp"
#include "risbound/gauge.hpp"
#include "risbound/mnt.hpp"
#include "risbound/optimizers.hpp"
#include "risbound/scenario_io.hpp"
#include "risbound/sdr.hpp"

namespace risbound {

struct RunConfig {
  std::string model_path;
  std::optional<ScenarioSpec> scenario;  // used when model_path is empty
  std::string loads;                     // empty: keep the model's own loads
  std::vector<BoundKind> bounds;
  std::vector<std::string> methods;
  std::vector<Index> ns;
  std::uint64_t seed = 0;
  double pt_mw = 10.0;
  double sigma2_mw = 1e-5;
  std::string solver = "ipm";
  unsigned jobs = 1;
  std::size_t es_cap = 24;
};

struct CommandResult {
  std::vector<ResultRow> rows;
  int failures = 0;  // computations that did not succeed (numerical)
};

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

inline std::vector<BoundKind> parse_bounds(const std::string& s) {
  std::vector<BoundKind> out;
  for (auto item : split_list(s)) {
    for (auto& ch : item) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    if (item == "ni") out.push_back(BoundKind::NI);
    else if (item == "nio") out.push_back(BoundKind::NIO);
    else if (item == "ibd") out.push_back(BoundKind::IBD);
    else if (item == "sdr") out.push_back(BoundKind::SDR);
    else fail(ErrorCode::InvalidArgument, "unknown bound '" + item + "' (expected ni, nio, ibd, sdr)");
  }
  return out;
}

inline std::vector<std::string> parse_methods(const std::string& s) {
  std::vector<std::string> out;
  for (auto item : split_list(s)) {
    for (auto& ch : item) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    if (item != "es" && item != "cd" && item != "ga" && item != "psdr")
      fail(ErrorCode::InvalidArgument, "unknown method '" + item + "' (expected es, cd, ga, psdr)");
    out.push_back(item);
  }
  return out;
}

inline std::vector<Index> parse_ns(const std::string& s) {
  std::vector<Index> out;
  for (const auto& item : split_list(s)) {
    std::size_t pos = 0;
    long long v = 0;
    try {
      v = std::stoll(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != item.size() || v < 1) fail(ErrorCode::InvalidArgument, "invalid n_s value '" + item + "'");
    out.push_back(static_cast<Index>(v));
  }
  return out;
}

inline double capacity_from_gain(double gain, double pt_mw, double sigma2_mw) {
  return shannon_capacity(cplx{std::sqrt(std::max(gain, 0.0))}, pt_mw, sigma2_mw);
}

/// The model selected by the configuration, with the requested load set.
inline ModelParameters resolve_model(const RunConfig& cfg, std::string* load_name = nullptr) {
  ModelParameters m = [&] {
    if (!cfg.model_path.empty()) return load_model(cfg.model_path);
    if (cfg.scenario) return generate_scenario(*cfg.scenario);
    fail(ErrorCode::InvalidArgument, "either a model file or a scenario specification is required");
  }();
  std::string name = "custom";
  if (!cfg.loads.empty()) {
    const LoadSet ls = load_set(cfg.loads);
    m = m.with_loads(ls.alpha, ls.beta);
    name = ls.name;
  } else {
    for (const char* cand : {"PM", "PIN", "01"}) {
      const LoadSet ls = load_set(cand);
      if (ls.alpha == m.alpha() && ls.beta == m.beta()) name = ls.name;
    }
  }
  if (load_name) *load_name = name;
  return m;
}

/// Checks that does not need the model: option ranges and names.
inline void validate_config(const RunConfig& cfg) {
  if (!(cfg.pt_mw > 0.0) || !std::isfinite(cfg.pt_mw)) fail(ErrorCode::InvalidArgument, "--pt-mw must be positive");
  if (!(cfg.sigma2_mw > 0.0) || !std::isfinite(cfg.sigma2_mw)) fail(ErrorCode::InvalidArgument, "--sigma2-mw must be positive");
  if (!cfg.loads.empty()) (void)load_set(cfg.loads);
  (void)make_solver(cfg.solver);
  if (cfg.jobs < 1) fail(ErrorCode::InvalidArgument, "--jobs must be at least 1");
}

namespace detail {

class Stopwatch {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count(); }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

inline std::string join(const std::vector<std::string>& v, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + v[i];
  return out;
}

// Bounds and optimizers on one model; rows in the order requested.
inline CommandResult evaluate_model(const ModelParameters& th, const std::string& scenario, const std::string& load_name,
                                    const RunConfig& cfg) {
  CommandResult res;
  auto row = [&](std::string method) {
    ResultRow r;
    r.scenario = scenario;
    r.n_s = th.n_s();
    r.load_set = load_name;
    r.method = std::move(method);
    r.seed = cfg.seed;
    return r;
  };
  auto finish = [&](ResultRow& r) {
    if (r.valid && std::isfinite(r.value)) r.capacity = capacity_from_gain(r.value, cfg.pt_mw, cfg.sigma2_mw);
    res.rows.push_back(std::move(r));
  };

  const bool need_sdr = std::find(cfg.bounds.begin(), cfg.bounds.end(), BoundKind::SDR) != cfg.bounds.end() ||
                        std::find(cfg.methods.begin(), cfg.methods.end(), "psdr") != cfg.methods.end();
  std::optional<SdrSolution> sdr;
  double sdr_time = 0.0;
  if (need_sdr) {
    Stopwatch sw;
    try {
      sdr = sdr_bound(th, *make_solver(cfg.solver));
    } catch (const Error& e) {
      sdr.reset();
    }
    sdr_time = sw.seconds();
  }

  for (BoundKind kind : cfg.bounds) {
    ResultRow r = row(std::string(to_string(kind)));
    Stopwatch sw;
    try {
      switch (kind) {
        case BoundKind::NI: {
          const BoundReport b = ni_bound(th);
          r.valid = b.valid;
          r.value = b.valid ? b.value : std::numeric_limits<double>::quiet_NaN();
          r.note = b.reason;
          break;
        }
        case BoundKind::NIO: {
          NioOptions o;
          o.seed = cfg.seed;
          const BoundReport b = nio_bound(th, o);
          r.valid = b.valid;
          r.value = b.valid ? b.value : std::numeric_limits<double>::quiet_NaN();
          r.note = b.reason;
          break;
        }
        case BoundKind::IBD: {
          if (!LoadSet{"", th.alpha(), th.beta()}.unit_modulus()) {
            r.note = "N/A: loads are not unit-modulus";
            break;
          }
          const auto [b, im] = ibd_bound(th);
          r.valid = b.valid;
          r.value = b.value;
          break;
        }
        case BoundKind::SDR: {
          r.runtime = sdr_time;
          if (!sdr) {
            r.note = "SolverNotConverged: numerical failure";
            ++res.failures;
            break;
          }
          r.value = sdr->bound;
          r.valid = sdr->certified;
          if (!sdr->certified) {
            r.note = "SolverNotConverged";
            ++res.failures;
          } else {
            std::ostringstream os;
            os << "effective_rank=" << sdr->effective_rank;
            r.note = os.str();
          }
          break;
        }
      }
    } catch (const Error& e) {
      r.valid = false;
      r.note = std::string(to_string(e.code())) + ": " + e.what();
      if (e.code() != ErrorCode::NotContractive && e.code() != ErrorCode::NotUnitModulusLoads) ++res.failures;
    }
    if (kind != BoundKind::SDR) r.runtime = sw.seconds();
    finish(r);
  }

  for (const auto& method : cfg.methods) {
    ResultRow r = row(method);
    Stopwatch sw;
    try {
      std::optional<OptimizerResult> o;
      if (method == "es") {
        ExhaustiveOptions eo;
        eo.max_elements = cfg.es_cap;
        o = exhaustive_search(th, eo);
      } else if (method == "cd") {
        o = coordinate_descent(th, cfg.seed);
      } else if (method == "ga") {
        o = genetic_algorithm(th, cfg.seed);
      } else if (method == "psdr") {
        if (!sdr) fail(ErrorCode::SolverNotConverged, "relaxation unavailable");
        o = project_sdr(th, sdr->x_check);
        if (!sdr->certified) r.note = "relaxation not certified";
        if (!o->flagged.empty()) {
          std::vector<std::string> ids;
          for (Index i : o->flagged) ids.push_back(std::to_string(i));
          r.note = "DegenerateDenominator at " + join(ids, " ");
        }
      }
      r.value = o->gain;
      r.valid = true;
      r.configuration = o->v.str();
    } catch (const Error& e) {
      r.note = std::string(to_string(e.code())) + ": " + e.what();
      ++res.failures;
    }
    r.runtime = sw.seconds() + (method == "psdr" ? sdr_time : 0.0);
    finish(r);
  }
  return res;
}

// Runs fn(i) for i in [0, count) on up to `jobs` threads.
inline void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::max(1U, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::mutex mu;
  std::size_t next = 0;
  std::exception_ptr err;
  std::vector<std::thread> pool;
  for (unsigned j = 0; j < jobs; ++j)
    pool.emplace_back([&] {
      for (;;) {
        std::size_t i;
        {
          std::lock_guard lk(mu);
          if (next >= count || err) return;
          i = next++;
        }
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lk(mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace detail

inline void cmd_gen(const ScenarioSpec& spec, const std::string& out_path) { save_model(generate_scenario(spec), out_path); }

inline std::string scenario_label(const RunConfig& cfg) {
  if (!cfg.model_path.empty()) {
    const auto slash = cfg.model_path.find_last_of('/');
    return slash == std::string::npos ? cfg.model_path : cfg.model_path.substr(slash + 1);
  }
  return cfg.scenario ? "seed" + std::to_string(cfg.scenario->seed) : "model";
}

inline CommandResult cmd_bound(const RunConfig& cfg) {
  validate_config(cfg);
  std::string load_name;
  const ModelParameters th = resolve_model(cfg, &load_name);
  RunConfig c = cfg;
  c.methods.clear();
  return detail::evaluate_model(th, scenario_label(cfg), load_name, c);
}

inline void check_es_cap(const RunConfig& cfg, Index n_s) {
  if (std::find(cfg.methods.begin(), cfg.methods.end(), "es") != cfg.methods.end() &&
      static_cast<std::size_t>(n_s) > cfg.es_cap)
    fail(ErrorCode::TooLarge, "exhaustive search requested for n_s = " + std::to_string(n_s) + " above the cap of " +
                                  std::to_string(cfg.es_cap));
}

inline CommandResult cmd_optimize(const RunConfig& cfg) {
  validate_config(cfg);
  std::string load_name;
  const ModelParameters th = resolve_model(cfg, &load_name);
  check_es_cap(cfg, th.n_s());
  RunConfig c = cfg;
  c.bounds.clear();
  return detail::evaluate_model(th, scenario_label(cfg), load_name, c);
}

/// Every n_s in the list is evaluated on the reduced model that keeps the
/// first n_s elements active and terminates the others in alpha.
inline CommandResult cmd_sweep(const RunConfig& cfg) {
  validate_config(cfg);
  std::string load_name;
  const ModelParameters th = resolve_model(cfg, &load_name);
  if (cfg.ns.empty()) fail(ErrorCode::InvalidArgument, "--ns is required for a sweep");
  for (Index n : cfg.ns) {
    if (n > th.n_s())
      fail(ErrorCode::InvalidArgument, "n_s = " + std::to_string(n) + " exceeds the model size " + std::to_string(th.n_s()));
    check_es_cap(cfg, n);
  }
  const std::string label = scenario_label(cfg);
  std::vector<CommandResult> parts(cfg.ns.size());
  detail::parallel_for(cfg.ns.size(), cfg.jobs, [&](std::size_t k) {
    std::vector<Index> active(static_cast<std::size_t>(cfg.ns[k]));
    for (std::size_t i = 0; i < active.size(); ++i) active[i] = static_cast<Index>(i);
    const ModelParameters reduced = reduce_model(th, active, FixedState::Alpha);
    parts[k] = detail::evaluate_model(reduced, label, load_name, cfg);
  });
  CommandResult out;
  for (auto& p : parts) {
    out.failures += p.failures;
    for (auto& r : p.rows) out.rows.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Property suite

/// Random gauge with |d_i|, |c| in [0.7, 1.4], random phases and |m| <= 0.4,
/// resampled until it is admissible with cond(I - m Gamma~) <= 100.
/// `kind`: 0 = diagonal similarity only, 1 = complex scaling only,
/// 2 = Moebius only, 3 = all three.
inline GaugeParameters random_admissible_gauge(const ModelParameters& th, std::mt19937_64& rng, int kind = 3) {
  std::uniform_real_distribution<double> mag(0.7, 1.4), ph(-std::numbers::pi, std::numbers::pi), rad(0.0, 0.4);
  const Index n = th.n_s();
  GaugeOptions strict;
  strict.mobius_cond_cap = 100.0;
  strict.pole_tol = 1e-3;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    GaugeParameters phi = GaugeParameters::identity(n);
    if (kind == 0 || kind == 3)
      for (Index i = 0; i < n; ++i) phi.d(i) = std::polar(mag(rng), ph(rng));
    if (kind == 1 || kind == 3) phi.c = std::polar(mag(rng), ph(rng));
    if (kind == 2 || kind == 3) phi.m = std::polar(rad(rng), ph(rng));
    if (gauge_admissible(th, phi, strict).admissible()) return phi;
  }
  fail(ErrorCode::NumericalFailure, "no admissible random gauge found");
}

inline std::string_view gauge_kind_name(int kind) {
  switch (kind) {
    case 0: return "ds";
    case 1: return "cs";
    case 2: return "mo";
    default: return "composite";
  }
}

struct VerifyResult {
  std::vector<ResultRow> rows;
  int failed = 0;  // gating properties that did not hold
  bool passed() const { return failed == 0; }
  std::string csv() const { return to_csv(rows, CsvOptions{false}); }
};

/// Property checks on `count` random scenarios (n_s in 3..6). Rows are in
/// scenario order whatever the number of jobs. Rows whose method starts with
/// "soft:" record observed orderings and never fail the run.
inline VerifyResult cmd_verify(std::uint64_t seed, std::size_t count, unsigned jobs = 1) {
  std::mt19937_64 master(seed);
  std::vector<std::uint64_t> seeds(count);
  for (auto& s : seeds) s = master();

  std::vector<std::vector<ResultRow>> parts(count);
  detail::parallel_for(count, jobs, [&](std::size_t idx) {
    auto& rows = parts[idx];
    ScenarioSpec spec;
    spec.seed = seeds[idx];
    spec.n_s = 3 + static_cast<Index>(idx % 4);
    spec.reciprocal = idx % 2 == 1;
    const ModelParameters base = generate_scenario(spec);
    const std::string name = "verify" + std::to_string(idx);
    std::mt19937_64 rng(seeds[idx] ^ 0x5DEECE66DULL);

    auto add = [&](const std::string& load, const std::string& prop, double value, bool ok, std::string note = {}) {
      ResultRow r;
      r.scenario = name;
      r.n_s = base.n_s();
      r.load_set = load;
      r.method = prop;
      r.value = value;
      r.valid = ok;
      r.seed = spec.seed;
      r.note = std::move(note);
      rows.push_back(std::move(r));
    };

    for (const char* ln : {"PM", "PIN", "01"}) {
      const LoadSet ls = load_set(ln);
      const ModelParameters th = base.with_loads(ls.alpha, ls.beta);
      const double es = exhaustive_search(th).gain;
      const SdrSolution sdr = sdr_bound(th);
      add(ln, "es<=sdr", es / sdr.bound, sdr.certified && es <= sdr.bound * (1.0 + 1e-6) + 1e-9,
          sdr.certified ? "" : "SolverNotConverged");
      const BoundReport ni = ni_bound(th);
      double nio_value = std::numeric_limits<double>::quiet_NaN();
      if (ni.valid) {
        NioOptions o;
        o.seed = spec.seed;
        const BoundReport nio = nio_bound(th, o);
        nio_value = nio.value;
        add(ln, "es<=ni", es / ni.value, es <= ni.value * (1.0 + 1e-9));
        add(ln, "es<=nio", es / nio.value, es <= nio.value * (1.0 + 1e-9));
        add(ln, "nio<=ni", nio.value / ni.value, nio.value <= ni.value * (1.0 + 1e-12));
      }
      if (ls.unit_modulus()) {
        const double ibd = ibd_bound(th).first.value;
        add(ln, "es<=ibd", es / ibd, es <= ibd * (1.0 + 1e-8));
        const bool ordered = sdr.bound <= ibd * (1.0 + 1e-9) && (std::isnan(nio_value) || ibd <= nio_value * (1.0 + 1e-9));
        add(ln, "soft:sdr<=ibd<=nio", sdr.bound / ibd, ordered, ordered ? "" : "ordering not observed");

        const IbdAchiever ach = ibd_achiever(th);
        const Index n = th.n_s();
        const double unit = (ach.phi.adjoint() * ach.phi - CMat::Identity(n, n)).norm();
        const double rel = std::abs(std::norm(channel_gain_full(th, ach.phi)) - ibd) / ibd;
        add(ln, "ibd-achiever", rel, unit <= 1e-10 * static_cast<double>(n) && rel <= 1e-8);

        const GaugeParameters phi = random_admissible_gauge(th, rng, 3);
        const SdrSolution sdr_g = sdr_bound(apply_gauge(th, phi));
        const double dev = std::abs(sdr_g.bound - sdr.bound) / sdr.bound;
        add(ln, "sdr-gauge-invariance", dev, sdr_g.certified && dev <= 1e-5);

        for (int kind = 0; kind < 3; ++kind) {
          const GaugeParameters pk = random_admissible_gauge(th, rng, kind);
          const double r = gauge_identity_check(th, pk, seeds[idx]).max_relative();
          add(ln, "gauge-identity:" + std::string(gauge_kind_name(kind)), r, r <= 1e-9);
        }

        const ModelParameters tt = apply_gauge(th, phi);
        double worst = 0.0;
        for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
          const ControlVector v = ControlVector::from_mask(mask, static_cast<std::size_t>(n));
          worst = std::max(worst, std::abs(channel_gain(tt, v) - channel_gain(th, v)));
        }
        add(ln, "gauge-channel", worst, worst <= 1e-10);
      }
    }
  });

  VerifyResult out;
  for (auto& p : parts)
    for (auto& r : p) {
      if (!r.valid && r.method.rfind("soft:", 0) != 0) ++out.failed;
      out.rows.push_back(std::move(r));
    }
  return out;
}

}  // namespace risbound
