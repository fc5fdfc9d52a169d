#pragma once

// Discrete configuration search: exhaustive enumeration, coordinate descent,
// a binary genetic algorithm and rounding of the relaxed solution.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "risbound/core.hpp"
#include "risbound/mnt.hpp"

namespace risbound {

struct OptimizerResult {
  std::string method;
  ControlVector v;
  double gain = 0.0;  // |h(v)|^2, re-evaluated directly at v
  std::uint64_t evaluations = 0;
  std::optional<std::vector<double>> trace;  // best gain after each sweep / generation
  std::uint64_t rng_seed = 0;
  std::vector<Index> flagged;  // elements that hit a degenerate case (rounding only)
};

namespace detail {

inline double direct_gain(const ModelParameters& m, const ControlVector& v) { return power_gain(channel_gain(m, v)); }

inline ControlVector random_configuration(std::size_t n, std::mt19937_64& rng) {
  ControlVector v(n);
  for (std::size_t i = 0; i < n; ++i) v.set(i, (rng() >> 63) != 0);
  return v;
}

struct EsCandidate {
  double gain = -1.0;
  std::vector<std::pair<std::uint64_t, double>> masks;  // (mask, gain) within the window of `gain`
};

}  // namespace detail

struct ExhaustiveOptions {
  std::size_t max_elements = 24;
  unsigned jobs = 1;
  double tie_tolerance = 1e-12;  // relative; gains this close count as equal
};

/// Global argmax over all 2^n_s configurations. Patterns are visited in Gray
/// order and evaluated with low-rank updates from the all-alpha baseline.
/// Near-maximal patterns are re-evaluated directly; among gains within the
/// tie tolerance of the best, the lexicographically smallest v wins.
inline OptimizerResult exhaustive_search(const ModelParameters& m, const ExhaustiveOptions& opts = {}) {
  const std::size_t n = static_cast<std::size_t>(m.n_s());
  if (n > opts.max_elements || n > 62)
    fail(ErrorCode::TooLarge, "exhaustive search over " + std::to_string(n) + " elements exceeds the cap of " +
                                  std::to_string(opts.max_elements));
  const std::uint64_t total = std::uint64_t{1} << n;
  const BaselineFactorization base = prepare_baseline(m, ControlVector(n));
  // Update errors are far below this window; it only decides which patterns
  // are worth a direct re-evaluation.
  const double window = 1e-9;

  auto scan = [&](std::uint64_t begin, std::uint64_t end) {
    detail::EsCandidate best;
    std::vector<Index> flips;
    flips.reserve(n);
    for (std::uint64_t k = begin; k < end; ++k) {
      const std::uint64_t mask = k ^ (k >> 1);
      flips.clear();
      for (std::size_t i = 0; i < n; ++i)
        if ((mask >> i) & 1U) flips.push_back(static_cast<Index>(i));
      const double g = power_gain(woodbury_channel(base, flips));
      if (g < best.gain * (1.0 - window)) continue;
      if (g > best.gain) {
        best.gain = g;
        const double floor = g * (1.0 - window);
        std::erase_if(best.masks, [&](const auto& e) { return e.second < floor; });
      }
      best.masks.emplace_back(mask, g);
    }
    return best;
  };

  std::vector<detail::EsCandidate> parts;
  const unsigned jobs = std::max(1U, std::min<unsigned>(opts.jobs, static_cast<unsigned>(std::min<std::uint64_t>(total, 64))));
  if (jobs == 1) {
    parts.push_back(scan(0, total));
  } else {
    parts.resize(jobs);
    std::vector<std::thread> workers;
    for (unsigned j = 0; j < jobs; ++j) {
      const std::uint64_t lo = total * j / jobs, hi = total * (j + 1) / jobs;
      workers.emplace_back([&, j, lo, hi] { parts[j] = scan(lo, hi); });
    }
    for (auto& w : workers) w.join();
  }

  // Direct re-evaluation of every candidate, then the tie rule.
  double gmax_fast = 0.0;
  for (const auto& p : parts) gmax_fast = std::max(gmax_fast, p.gain);
  std::vector<std::pair<ControlVector, double>> cands;
  for (const auto& p : parts)
    for (const auto& [mk, g] : p.masks) {
      if (g < gmax_fast * (1.0 - window)) continue;
      ControlVector v = ControlVector::from_mask(mk, n);
      cands.emplace_back(v, detail::direct_gain(m, v));
    }
  double gmax = 0.0;
  for (const auto& c : cands) gmax = std::max(gmax, c.second);
  OptimizerResult res;
  res.method = "es";
  res.evaluations = total;
  bool have = false;
  for (const auto& c : cands) {
    if (c.second < gmax * (1.0 - opts.tie_tolerance)) continue;
    if (!have || c.first < res.v) {
      res.v = c.first;
      res.gain = c.second;
      have = true;
    }
  }
  return res;
}

struct CoordinateDescentOptions {
  std::size_t initial_samples = 100;
  std::size_t max_sweeps = 10000;
};

/// Best of K random starts, then single-bit flips in ascending order; stops
/// once n_s consecutive attempts bring no improvement.
inline OptimizerResult coordinate_descent(const ModelParameters& m, std::uint64_t seed,
                                          const CoordinateDescentOptions& opts = {}) {
  const std::size_t n = static_cast<std::size_t>(m.n_s());
  std::mt19937_64 rng(seed);
  OptimizerResult res;
  res.method = "cd";
  res.rng_seed = seed;
  res.trace.emplace();

  ControlVector v = detail::random_configuration(n, rng);
  double g = detail::direct_gain(m, v);
  for (std::size_t k = 1; k < std::max<std::size_t>(opts.initial_samples, 1); ++k) {
    ControlVector c = detail::random_configuration(n, rng);
    const double gc = detail::direct_gain(m, c);
    if (gc > g) {
      v = std::move(c);
      g = gc;
    }
  }
  res.evaluations = std::max<std::size_t>(opts.initial_samples, 1);
  res.trace->push_back(g);

  BaselineFactorization base = prepare_baseline(m, v);
  std::size_t idle = 0, i = 0, attempts = 0;
  const std::size_t limit = opts.max_sweeps * n;
  while (idle < n && attempts < limit) {
    const Index flip[1] = {static_cast<Index>(i)};
    const double gf = power_gain(woodbury_channel(base, flip));
    ++res.evaluations;
    ++attempts;
    if (gf > g) {
      v.flip(i);
      g = gf;
      base = prepare_baseline(m, v);
      idle = 0;
    } else {
      ++idle;
    }
    if (++i == n) {
      i = 0;
      res.trace->push_back(g);
    }
  }
  res.v = v;
  res.gain = detail::direct_gain(m, v);
  return res;
}

struct GaParams {
  std::size_t population = 200;
  std::size_t generations_per_element = 100;  // cap = this * n_s
  std::size_t stall_generations = 50;
  double function_tolerance = 1e-6;           // relative
  std::size_t tournament_size = 3;
  double crossover_rate = 0.9;
  std::optional<double> mutation_rate;        // default 1 / n_s
  std::size_t elite = 2;
};

/// Binary genetic algorithm maximizing |h|^2. Stops at the generation cap or
/// when the best gain improved by at most `function_tolerance` (relative)
/// over the last `stall_generations` generations.
inline OptimizerResult genetic_algorithm(const ModelParameters& m, std::uint64_t seed, const GaParams& params = {}) {
  const std::size_t n = static_cast<std::size_t>(m.n_s());
  if (params.population < 2 || params.tournament_size < 1 || params.elite > params.population)
    fail(ErrorCode::InvalidArgument, "invalid genetic algorithm parameters");
  const double pm = params.mutation_rate.value_or(1.0 / static_cast<double>(n));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, params.population - 1);

  OptimizerResult res;
  res.method = "ga";
  res.rng_seed = seed;
  res.trace.emplace();

  std::unordered_map<std::string, double> cache;
  auto fitness = [&](const ControlVector& v) {
    const std::string key = v.str();
    if (auto it = cache.find(key); it != cache.end()) return it->second;
    const double g = detail::direct_gain(m, v);
    ++res.evaluations;
    cache.emplace(key, g);
    return g;
  };

  std::vector<ControlVector> pop;
  std::vector<double> fit;
  for (std::size_t k = 0; k < params.population; ++k) pop.push_back(detail::random_configuration(n, rng));
  for (const auto& v : pop) fit.push_back(fitness(v));

  ControlVector best_v = pop[0];
  double best_g = fit[0];
  auto update_best = [&] {
    for (std::size_t k = 0; k < pop.size(); ++k)
      if (fit[k] > best_g || (fit[k] == best_g && pop[k] < best_v)) {
        best_g = fit[k];
        best_v = pop[k];
      }
  };
  update_best();
  res.trace->push_back(best_g);

  auto tournament = [&]() -> const ControlVector& {
    std::size_t w = pick(rng);
    for (std::size_t t = 1; t < params.tournament_size; ++t) {
      const std::size_t c = pick(rng);
      if (fit[c] > fit[w]) w = c;
    }
    return pop[w];
  };

  const std::size_t max_gen = params.generations_per_element * n;
  for (std::size_t gen = 0; gen < max_gen; ++gen) {
    std::vector<std::size_t> order(pop.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return fit[x] > fit[y]; });

    std::vector<ControlVector> next;
    next.reserve(params.population);
    for (std::size_t e = 0; e < params.elite; ++e) next.push_back(pop[order[e]]);
    while (next.size() < params.population) {
      ControlVector c1 = tournament(), c2 = tournament();
      if (unif(rng) < params.crossover_rate)
        for (std::size_t i = 0; i < n; ++i)
          if (unif(rng) < 0.5) {
            const bool b1 = c1[i] != 0, b2 = c2[i] != 0;
            c1.set(i, b2);
            c2.set(i, b1);
          }
      for (ControlVector* c : {&c1, &c2}) {
        for (std::size_t i = 0; i < n; ++i)
          if (unif(rng) < pm) c->flip(i);
        if (next.size() < params.population) next.push_back(std::move(*c));
      }
    }
    pop = std::move(next);
    for (std::size_t k = 0; k < pop.size(); ++k) fit[k] = fitness(pop[k]);
    update_best();
    res.trace->push_back(best_g);

    const auto& tr = *res.trace;
    if (tr.size() > params.stall_generations) {
      const double old = tr[tr.size() - 1 - params.stall_generations];
      if (best_g - old <= params.function_tolerance * std::max(std::abs(old), 1e-300)) break;
    }
  }
  res.v = best_v;
  res.gain = detail::direct_gain(m, best_v);
  return res;
}

/// Rounds the relaxed auxiliary vector: rho_i = x_i / (b_i + (Gamma x)_i) is
/// quantized to the nearer of alpha (ties) and beta. A zero denominator
/// leaves v_i = 0 and records i in `flagged`.
inline OptimizerResult project_sdr(const ModelParameters& th, const CVec& x_check) {
  const Index n = th.n_s();
  if (x_check.size() != n) fail(ErrorCode::InvalidArgument, "x_check must have length n_s");
  const CVec z = th.b() + th.gamma() * x_check;
  OptimizerResult res;
  res.method = "psdr";
  res.v = ControlVector(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    if (z(i) == cplx{0.0}) {
      res.flagged.push_back(i);
      continue;
    }
    const cplx rho = x_check(i) / z(i);
    if (std::abs(rho - th.alpha()) > std::abs(rho - th.beta())) res.v.set(static_cast<std::size_t>(i), true);
  }
  res.gain = detail::direct_gain(th, res.v);
  res.evaluations = 1;
  return res;
}

}  // namespace risbound
