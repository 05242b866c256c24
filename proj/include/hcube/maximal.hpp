#pragma once

// Maximal operators pi_x M_A f = max_{A in A} pi_x A f over finite (or
// grid-sampled) families of radial operators, and estimates of their norms.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "hcube/cube_core.hpp"
#include "hcube/krawtchouk.hpp"
#include "hcube/radial_ops.hpp"
#include "hcube/report.hpp"

namespace hcube {

struct MaximalResult {
  CubeFunction values;
  std::vector<std::uint32_t> selector;
  json family_tag;
};

namespace detail {

inline void require_family(const OperatorFamily& family, const CubeFunction& f) {
  if (family.empty()) throw DomainError("maximal operator over an empty family");
  if (family.n != f.dim()) throw DimensionMismatch("family and function dimensions differ");
  for (const auto& m : family.members)
    if (m.n != family.n) throw DimensionMismatch("family members on different cubes");
}

inline bool all_weighted(const OperatorFamily& family) {
  return std::all_of(family.members.begin(), family.members.end(),
                     [](const RadialOperator& m) { return m.has_weights(); });
}

// Running max with ties broken toward the smallest member index.
inline void fold_member(std::span<const double> action, std::uint32_t m, std::vector<double>& best,
                        std::vector<std::uint32_t>& sel) {
  for (std::size_t x = 0; x < action.size(); ++x) {
    if (m == 0 || action[x] > best[x]) {
      best[x] = action[x];
      sel[x] = m;
    }
  }
}

}  // namespace detail

/// Pointwise maximum without the nonnegativity precondition (used by identity checks).
inline MaximalResult maximal_apply_signed(const OperatorFamily& family, const CubeFunction& f,
                                          const ExecOptions& opts = {}) {
  detail::require_family(family, f);
  const std::size_t N = f.size();
  std::vector<double> best(N, 0.0);
  std::vector<std::uint32_t> sel(N, 0);
  if (detail::all_weighted(family)) {
    // One sphere-sum pass serves every member.
    const SphereSumMatrix s = sphere_means_all(f, opts);
    const int n = f.dim();
    std::vector<double> action(N);
    for (std::uint32_t m = 0; m < family.size(); ++m) {
      const auto& w = *family.members[m].weights;
      std::vector<int> support;
      for (int k = 0; k <= n; ++k)
        if (w[k] != 0.0) support.push_back(k);
      for (Vertex x = 0; x < N; ++x) {
        double acc = 0.0;
        for (int k : support) acc += w[k] * s(x, k);
        action[x] = acc;
      }
      detail::fold_member(action, m, best, sel);
    }
  } else {
    const SpectralCoefficients fhat = wht(f, opts);
    for (std::uint32_t m = 0; m < family.size(); ++m) {
      const CubeFunction a = apply_spectral(family.members[m], fhat, opts);
      detail::fold_member(a.values(), m, best, sel);
    }
  }
  return {CubeFunction(f.dim(), std::move(best)), std::move(sel), family.descriptor()};
}

/// M_A f for nonnegative f.
inline MaximalResult maximal_apply(const OperatorFamily& family, const CubeFunction& f,
                                   const ExecOptions& opts = {}) {
  if (!f.nonnegative()) {
    throw DomainError("maximal_apply: f has negative entries; apply to |f| instead "
                      "(|M f| <= M |f| for nonnegative families)");
  }
  return maximal_apply_signed(family, f, opts);
}

/// ||M f||_2 / ||f||_2.
inline double maximal_ratio2(const OperatorFamily& family, const CubeFunction& f, const ExecOptions& opts = {}) {
  const double denom = lp_norm(f, 2.0);
  if (denom == 0.0) return 0.0;
  return lp_norm(maximal_apply(family, f, opts).values, 2.0) / denom;
}

/// sup_{lambda > 0} lambda #{x : v(x) >= lambda} / l1, exactly, via the descending sort.
inline double weak_ratio(std::span<const double> v, double l1) {
  if (!(l1 > 0.0)) throw DomainError("weak_ratio: ||f||_1 must be positive");
  std::vector<double> s(v.begin(), v.end());
  std::sort(s.begin(), s.end(), std::greater<>());
  double best = 0.0;
  for (std::size_t i = 0; i < s.size() && s[i] > 0.0; ++i) best = std::max(best, (i + 1) * s[i]);
  return best / l1;
}

inline double weak_l1_ratio(const OperatorFamily& family, const CubeFunction& f, const ExecOptions& opts = {}) {
  const double l1 = lp_norm(f, 1.0);
  if (l1 == 0.0) throw DomainError("weak_l1_ratio: f is identically zero");
  return weak_ratio(maximal_apply(family, f, opts).values.values(), l1);
}

/// ||M_S delta||_1 as an exact rational.
///
/// For n <= 20 the maximal function of a point mass is evaluated at every
/// vertex from exact integer sphere sums; beyond that the value is assembled
/// per distance class.
inline Rational l1_norm_check(int n) {
  if (n < 0) throw DomainError("l1_norm_check: n must be >= 0");
  if (n > 20) {
    Rational total = 0;
    for (int d = 0; d <= n; ++d) total += Rational(big_binomial(n, d), big_binomial(n, d));
    return total;
  }
  std::vector<std::int64_t> delta(cube_size(n), 0);
  delta[0] = 1;
  const auto sums = sphere_sums<std::int64_t>(n, delta);
  const std::size_t width = static_cast<std::size_t>(n) + 1;
  std::vector<std::int64_t> binom(width);
  for (int k = 0; k <= n; ++k) binom[k] = binomial_i64(n, k);
  std::vector<std::int64_t> tally(width, 0);  // sum of numerators grouped by argmax radius
  for (Vertex x = 0; x < cube_size(n); ++x) {
    int arg = 0;
    for (int k = 1; k <= n; ++k) {
      const auto lhs = static_cast<__int128>(sums[x * width + k]) * binom[arg];
      const auto rhs = static_cast<__int128>(sums[x * width + arg]) * binom[k];
      if (lhs > rhs) arg = k;
    }
    tally[arg] += sums[x * width + arg];
  }
  Rational total = 0;
  for (int k = 0; k <= n; ++k) total += Rational(BigInt(tally[k]), BigInt(binom[k]));
  return total;
}

/// Weak-type p -> p bound 2 (p/(p-1))^{1/p} from weak (1,1) and (inf,inf) constants 1.
inline double marcinkiewicz_bound(double p) {
  if (!(p > 1.0)) throw DomainError("marcinkiewicz_bound: p must exceed 1");
  if (std::isinf(p)) return 2.0;
  return 2.0 * std::pow(p / (p - 1.0), 1.0 / p);
}

// ---------------------------------------------------------------------------
// Norm estimation

struct AscentOptions {
  std::uint64_t seed = 0;
  int restarts = 32;
  int max_iter = 200;
  double tolerance = 1e-10;
  unsigned threads = 1;
};

struct NormEstimate {
  double value = 0.0;
  CubeFunction witness;
  std::string method;
  int iterations = 0;
  int restarts = 0;
  int best_restart = 0;
  std::uint64_t seed = 0;
  std::vector<double> history;
  json family = nullptr;

  json to_json(const std::string& witness_file = "") const {
    json j{{"family", family.value("family", "")},
           {"n", witness.dim()},
           {"value", value},
           {"method", method},
           {"seed", seed},
           {"restarts", restarts},
           {"best_restart", best_restart},
           {"iterations", iterations},
           {"history", history},
           {"grid", family.contains("grid") ? family["grid"] : json(nullptr)}};
    j["witness_file"] = witness_file.empty() ? json(nullptr) : json(witness_file);
    return j;
  }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline CubeFunction normalized(CubeFunction f) {
  const double norm = lp_norm(f, 2.0);
  if (norm > 0.0)
    for (double& v : f.values()) v /= norm;
  return f;
}

inline CubeFunction ascent_start(int n, int restart, std::uint64_t seed) {
  const std::size_t N = cube_size(n);
  if (restart == 0) return CubeFunction::delta(n, 0);
  if (restart == 1) return CubeFunction::constant(n, 1.0);
  std::mt19937_64 rng(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(restart))));
  std::vector<double> v(N, 0.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  switch (restart % 3) {
    case 0:
      for (double& x : v) x = unif(rng);
      break;
    case 1: {
      const double density = std::ldexp(1.0, -static_cast<int>(1 + rng() % std::max(1, n)));
      for (double& x : v) x = unif(rng) < density ? 1.0 : 0.0;
      v[rng() % N] = 1.0;
      break;
    }
    default: {
      std::exponential_distribution<double> ex(1.0);
      for (double& x : v) x = std::pow(ex(rng), 4.0);
      break;
    }
  }
  return CubeFunction(n, std::move(v));
}

// T_f^T T_f g for the row-selection operator frozen at selector `sel`,
// evaluated as sum_m A_m (1_{sel = m} * Mf). Radial operators are symmetric.
inline CubeFunction selection_gram_step(const OperatorFamily& family, const MaximalResult& res,
                                        const ExecOptions& opts) {
  const int n = family.n;
  const std::size_t N = cube_size(n);
  std::vector<double> acc(N, 0.0);
  std::vector<char> used(family.size(), 0);
  for (auto m : res.selector) used[m] = 1;
  for (std::uint32_t m = 0; m < family.size(); ++m) {
    if (!used[m]) continue;
    std::vector<double> g(N, 0.0);
    for (Vertex x = 0; x < N; ++x)
      if (res.selector[x] == m) g[x] = res.values[x];
    SpectralCoefficients c = wht(CubeFunction(n, std::move(g)), opts);
    const auto& lam = family.members[m].profile;
    for (Vertex y = 0; y < N; ++y) acc[y] += lam[level_of(y)] * c[y];
  }
  CubeFunction out = wht(SpectralCoefficients(n, std::move(acc)), opts);
  for (double& v : out.values()) v = std::max(v, 0.0);
  return out;
}

struct RestartOutcome {
  double value = 0.0;
  CubeFunction witness;
  int iterations = 0;
  std::vector<double> history;
};

inline RestartOutcome run_restart(const OperatorFamily& family, int restart, const AscentOptions& ao) {
  const ExecOptions opts{};
  RestartOutcome out;
  CubeFunction f = normalized(ascent_start(family.n, restart, ao.seed));
  MaximalResult res = maximal_apply(family, f, opts);
  double ratio = lp_norm(res.values, 2.0);
  out.history.push_back(ratio);
  int it = 0;
  for (; it < ao.max_iter; ++it) {
    CubeFunction g = selection_gram_step(family, res, opts);
    if (lp_norm(g, 2.0) == 0.0) break;
    g = normalized(std::move(g));
    MaximalResult next = maximal_apply(family, g, opts);
    const double next_ratio = lp_norm(next.values, 2.0) / lp_norm(g, 2.0);
    if (next_ratio > ratio) {
      const double gain = next_ratio - ratio;
      f = std::move(g);
      res = std::move(next);
      ratio = next_ratio;
      out.history.push_back(ratio);
      if (gain < ao.tolerance) {
        ++it;
        break;
      }
    } else {
      break;
    }
  }
  out.iterations = it;
  out.witness = std::move(f);
  out.value = lp_norm(res.values, 2.0) / lp_norm(out.witness, 2.0);
  return out;
}

}  // namespace detail

/// Certified lower bound on ||M_A||_{2->2} by alternating selector/power ascent.
///
/// Each restart freezes the argmax selector, takes a power step with the
/// resulting linear row-selection operator, then re-selects; the Rayleigh
/// ratio is non-decreasing along a run. Restart 0 starts from a point mass,
/// restart 1 from the constant, the rest from seeded random nonnegative f.
inline NormEstimate norm2_ascent(const OperatorFamily& family, const AscentOptions& ao = {}) {
  if (family.empty()) throw DomainError("norm2_ascent: empty family");
  const int restarts = std::max(1, ao.restarts);
  std::vector<detail::RestartOutcome> outcomes(restarts);
  const unsigned workers = std::max(1u, std::min<unsigned>(ao.threads, restarts));
  if (workers == 1) {
    for (int r = 0; r < restarts; ++r) outcomes[r] = detail::run_restart(family, r, ao);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (int r = static_cast<int>(w); r < restarts; r += static_cast<int>(workers))
          outcomes[r] = detail::run_restart(family, r, ao);
      });
    }
  }
  int best = 0;
  for (int r = 1; r < restarts; ++r)
    if (outcomes[r].value > outcomes[best].value) best = r;
  NormEstimate est;
  est.value = outcomes[best].value;
  est.witness = outcomes[best].witness;
  est.method = "selector_power_ascent";
  est.restarts = restarts;
  est.best_restart = best;
  est.seed = ao.seed;
  est.family = family.descriptor();
  est.history = outcomes[best].history;
  for (const auto& o : outcomes) est.iterations += o.iterations;
  return est;
}

/// Grid search over the nonnegative unit sphere followed by compass-search polish. n <= 3.
inline NormEstimate norm2_exhaustive_small(const OperatorFamily& family, int grid_resolution = 16) {
  if (family.empty()) throw DomainError("norm2_exhaustive_small: empty family");
  const int n = family.n;
  if (n > 3) throw CapacityError("norm2_exhaustive_small: n must be <= 3");
  if (grid_resolution < 1) throw DomainError("norm2_exhaustive_small: resolution must be positive");
  const int N = static_cast<int>(cube_size(n));

  // Dense member matrices from the images of point masses.
  std::vector<std::vector<double>> mats;
  for (const auto& m : family.members) {
    std::vector<double> a(static_cast<std::size_t>(N) * N);
    for (int y = 0; y < N; ++y) {
      const CubeFunction col = apply(m, CubeFunction::delta(n, y));
      for (int x = 0; x < N; ++x) a[static_cast<std::size_t>(x) * N + y] = col[x];
    }
    mats.push_back(std::move(a));
  }
  auto ratio = [&](const std::vector<double>& f) {
    double num = 0.0, den = 0.0;
    for (int x = 0; x < N; ++x) {
      double best = -std::numeric_limits<double>::infinity();
      for (const auto& a : mats) {
        double s = 0.0;
        for (int y = 0; y < N; ++y) s += a[static_cast<std::size_t>(x) * N + y] * f[y];
        best = std::max(best, s);
      }
      num += best * best;
      den += f[x] * f[x];
    }
    return den > 0.0 ? std::sqrt(num / den) : 0.0;
  };

  // Enumerate compositions of the resolution into N nonnegative parts.
  constexpr std::size_t kKeep = 8;
  std::vector<std::pair<double, std::vector<double>>> top;
  std::vector<int> parts(N, 0);
  std::function<void(int, int)> rec = [&](int i, int left) {
    if (i == N - 1) {
      parts[i] = left;
      std::vector<double> f(parts.begin(), parts.end());
      const double r = ratio(f);
      if (top.size() < kKeep || r > top.back().first) {
        top.emplace_back(r, std::move(f));
        std::sort(top.begin(), top.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
        if (top.size() > kKeep) top.pop_back();
      }
      return;
    }
    for (int v = 0; v <= left; ++v) {
      parts[i] = v;
      rec(i + 1, left - v);
    }
  };
  rec(0, grid_resolution);

  double best_val = -1.0;
  std::vector<double> best_f;
  for (auto& [r0, f] : top) {
    double r = r0;
    double scale = 0.0;
    for (double v : f) scale = std::max(scale, v);
    for (double& v : f) v /= scale;
    double step = 1.0 / grid_resolution;
    while (step > 1e-10) {
      bool improved = false;
      for (int i = 0; i < N; ++i) {
        for (double dir : {1.0, -1.0}) {
          std::vector<double> g = f;
          g[i] = std::max(0.0, g[i] + dir * step);
          const double rg = ratio(g);
          if (rg > r + 1e-15) {
            f = std::move(g);
            r = rg;
            improved = true;
          }
        }
      }
      if (!improved) step *= 0.5;
    }
    if (r > best_val) {
      best_val = r;
      best_f = f;
    }
  }
  NormEstimate est;
  est.witness = detail::normalized(CubeFunction(n, best_f));
  est.value = maximal_ratio2(family, est.witness);
  est.method = "grid_polish";
  est.restarts = static_cast<int>(top.size());
  est.family = family.descriptor();
  est.family["grid_resolution"] = grid_resolution;
  return est;
}

// ---------------------------------------------------------------------------
// Conformance checks

/// ||M_S delta||_1 = n + 1 exactly for every n in [n_lo, n_hi].
inline CheckReport l1_norm_report(int n_lo, int n_hi) {
  CheckReport rep("maximal.l1_norm", "L1-NORM", n_lo, n_hi);
  rep.params = {{"mode", "rational"}};
  json values = json::array();
  for (int n = n_lo; n <= n_hi; ++n) {
    const Rational v = l1_norm_check(n);
    values.push_back({{"n", n}, {"value", v.str()}});
    if (v != n + 1) rep.fail("n=" + std::to_string(n) + ": got " + v.str());
    rep.observe(to_double(abs(v - (n + 1))), {{"n", n}});
  }
  rep.constants = {{"values", values}};
  return rep;
}

/// ||M_Sen(N) f||_2 <= 2 sqrt2 ||f||_2 on `trials` random nonnegative f, with
/// Sen(N) sampled on the default geometric T-grid.
inline CheckReport marcinkiewicz_check(int n, int trials, std::uint64_t seed, int grid_points = kDefaultGridPoints,
                                       const ExecOptions& opts = {}) {
  CheckReport rep("maximal.marcinkiewicz", "MARCINKIEWICZ-2", n, n);
  const GridSpec grid = default_t_grid(n, grid_points);
  const double bound = marcinkiewicz_bound(2.0);
  rep.params = {{"trials", trials}, {"seed", seed}, {"grid", grid.to_json()}, {"bound", bound}};
  const OperatorFamily fam = senate_noise_T_family(n, grid);
  double worst = 0.0;
  for (int i = 0; i < trials; ++i) {
    const CubeFunction f = detail::ascent_start(n, i, seed);
    const double r = maximal_ratio2(fam, f, opts);
    if (r > worst) worst = r;
    if (r > bound) rep.fail("trial " + std::to_string(i) + ": ratio " + std::to_string(r));
  }
  rep.observe(worst - bound, {{"n", n}});
  rep.constants = {{"worst_ratio", worst}, {"bound", bound}};
  return rep;
}

}  // namespace hcube
