#pragma once

// Command-line driver: conformance suites, norm estimates, marking games,
// transforms. Exit codes: 0 all checks pass, 1 a check failed, 2 usage,
// capacity or input-format error.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hcube/comparison.hpp"
#include "hcube/cube_core.hpp"
#include "hcube/cube_io.hpp"
#include "hcube/error.hpp"
#include "hcube/games.hpp"
#include "hcube/krawtchouk.hpp"
#include "hcube/maximal.hpp"
#include "hcube/radial_ops.hpp"
#include "hcube/report.hpp"

namespace hcube::cli {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string command;
  int n = 4;
  std::optional<int> n_min;
  std::optional<int> n_max;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string out;
  std::string format = "json";
  std::optional<double> tolerance;
  int grid_points = kDefaultGridPoints;
  int restarts = 32;
  std::size_t budget = 20000;
  std::optional<int> trials;
  int chains = 1;
  std::optional<int> m;
  std::optional<int> k;
  std::optional<Vertex> center;
  std::string input;
  std::string family = "S";
  std::string k_range = "all";
  std::string marking_out;
  int max_dimension = kDefaultMaxDimension;

  ExecOptions exec() const { return {max_dimension, threads}; }

  json to_json() const {
    json j{{"command", command},   {"seed", seed},           {"threads", threads},
           {"format", format},     {"grid_points", grid_points}, {"restarts", restarts},
           {"budget", budget},     {"chains", chains},       {"family", family},
           {"k_range", k_range},   {"max_dimension", max_dimension}};
    if (n_max) {
      j["n_range"] = {n_min.value_or(0), *n_max};
    } else {
      j["n"] = n;
    }
    if (tolerance) j["tolerance"] = *tolerance;
    if (trials) j["trials"] = *trials;
    if (m) j["m"] = *m;
    if (k) j["k"] = *k;
    if (center) j["center"] = *center;
    if (!input.empty()) j["input"] = input;
    if (!out.empty()) j["out"] = out;
    return j;
  }

  /// [lo, hi] from --n / --n-min / --n-max, clipped below at `floor`.
  std::pair<int, int> range(int floor = 0) const {
    if (!n_max) return {n, n};
    return {std::max(n_min.value_or(floor), floor), *n_max};
  }
};

/// What a command produced: machine results plus the text and CSV renderings.
struct Outcome {
  std::vector<json> results;
  std::vector<std::string> text;
  std::string csv_header;
  std::vector<std::string> csv_rows;
  // Set when --out already holds the command's data file.
  bool out_is_data = false;

  void add_check(const CheckReport& r) {
    results.push_back(r.to_json());
    text.push_back(std::string(r.pass ? "PASS " : "FAIL ") + r.claim_id + " " + r.check + " n=[" +
                   std::to_string(r.n_min) + "," + std::to_string(r.n_max) + "]");
  }
};

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline OperatorFamily make_family(const std::string& name, int n, int grid_points) {
  const KrawtchoukTable t(n);
  if (name == "S") return spherical_family(t, n);
  if (name == "S_bar") return spherical_family(t, n / 2);
  if (name == "Sen(S)") return senate_family(spherical_family(t, n));
  if (name == "Sen(S_bar)") return senate_family(spherical_family(t, n / 2));
  if (name == "N") return noise_t_family(n, default_t_grid(n, grid_points));
  if (name == "Sen(N)") return senate_noise_T_family(n, default_t_grid(n, grid_points));
  if (name == "Sen(N~)") return senate_noise_window_family(n);
  throw UsageError("unknown family '" + name + "' (S, S_bar, Sen(S), Sen(S_bar), N, Sen(N), Sen(N~))");
}

inline CubeFunction load_function(const RunConfig& c) {
  if (c.input.empty()) throw UsageError("--input is required");
  return io::load(c.input, c.exec());
}

}  // namespace detail

// ---------------------------------------------------------------------------
// krawtchouk

inline Outcome cmd_krawtchouk_table(const RunConfig& c) {
  const KrawtchoukTable t(c.n);
  Outcome o;
  o.csv_header = "k,x,K,kappa";
  json K = json::array();
  json kappa = json::array();
  for (int k = 0; k <= c.n; ++k) {
    json rk = json::array();
    json rq = json::array();
    for (int x = 0; x <= c.n; ++x) {
      rk.push_back(t.unnormalized(k, x).str());
      rq.push_back(t(k, x));
      o.csv_rows.push_back(std::to_string(k) + "," + std::to_string(x) + "," + t.unnormalized(k, x).str() + "," +
                           fmt(t(k, x)));
    }
    K.push_back(rk);
    kappa.push_back(rq);
  }
  o.results.push_back({{"kind", "krawtchouk_table"}, {"n", c.n}, {"K", K}, {"kappa", kappa}});
  o.text.push_back(o.csv_header);
  o.text.insert(o.text.end(), o.csv_rows.begin(), o.csv_rows.end());
  return o;
}

inline Outcome cmd_krawtchouk_verify(const RunConfig& c) {
  const auto [lo, hi] = c.range(0);
  CheckReport sym("krawtchouk.symmetry", "KRAWT-SYM", lo, hi);
  CheckReport ortho("krawtchouk.orthogonality", "KRAWT-ORTHO", lo, hi);
  for (int n = lo; n <= hi; ++n) {
    const KrawtchoukTable t(n);
    sym.absorb(verify_symmetries(t));
    ortho.absorb(verify_orthogonality(t));
  }
  Outcome o;
  o.add_check(sym);
  o.add_check(ortho);
  return o;
}

inline Outcome cmd_krawtchouk_roots(const RunConfig& c) {
  Outcome o;
  if (c.k) {
    const auto r = roots(c.n, *c.k);
    o.results.push_back({{"kind", "krawtchouk_roots"}, {"n", c.n}, {"k", *c.k}, {"roots", r}});
    o.csv_header = "n,k,index,root";
    for (std::size_t i = 0; i < r.size(); ++i) {
      o.csv_rows.push_back(std::to_string(c.n) + "," + std::to_string(*c.k) + "," + std::to_string(i) + "," + fmt(r[i]));
      o.text.push_back(fmt(r[i]));
    }
    return o;
  }
  if (c.k_range != "all" && c.k_range != "half") throw UsageError("--k-range must be all or half");
  const auto [lo, hi] = c.range(1);
  o.add_check(verify_roots(std::max(lo, 1), hi, c.tolerance.value_or(1e-9), 1e-8, c.k_range == "half"));
  return o;
}

inline CheckReport decay_report(const DecayConstants& d) {
  CheckReport rep("krawtchouk.decay", "KRAWT-DECAY", d.n_min, d.n_max);
  rep.params = {{"n0", d.n0}, {"rel_tol", 1e-12}};
  rep.constants = d.to_json();
  if (!d.bound_holds) rep.fail("|kappa_k(x)| exceeds exp(-c_cert k x / n)");
  if (!(d.c2 > 0.0)) rep.fail("c2 is not positive");
  rep.observe(d.worst_bound_ratio - 1.0, d.worst_bound_case);
  return rep;
}

inline Outcome cmd_krawtchouk_decay(const RunConfig& c) {
  const int hi = c.n_max.value_or(std::max(c.n, 2));
  const DecayConstants d = decay_constants(hi);
  Outcome o;
  o.add_check(decay_report(d));
  o.add_check(verify_case_constants());
  o.text.push_back("c_cert " + fmt(d.c_cert));
  o.text.push_back("c2 " + fmt(d.c2));
  o.csv_header = "n,c_emp";
  for (int n = d.n_min; n <= d.n_max; ++n) o.csv_rows.push_back(std::to_string(n) + "," + fmt(d.c_emp[n]));
  return o;
}

// ---------------------------------------------------------------------------
// norm

inline std::string estimate_csv_row(const NormEstimate& e) {
  return std::to_string(e.witness.dim()) + "," + e.family.value("family", "") + "," + fmt(e.value) + "," + e.method +
         "," + std::to_string(e.seed) + "," + std::to_string(e.restarts) + "," + std::to_string(e.best_restart) + "," +
         std::to_string(e.iterations);
}

inline constexpr const char* kEstimateCsvHeader = "n,family,value,method,seed,restarts,best_restart,iterations";

inline Outcome cmd_norm_estimate(const RunConfig& c) {
  const auto [lo, hi] = c.range(1);
  Outcome o;
  o.csv_header = kEstimateCsvHeader;
  for (int n = lo; n <= hi; ++n) {
    check_capacity(n, c.exec());
    AscentOptions ao;
    ao.seed = c.seed;
    ao.restarts = c.restarts;
    ao.threads = c.threads;
    if (c.tolerance) ao.tolerance = *c.tolerance;
    const NormEstimate e = norm2_ascent(detail::make_family(c.family, n, c.grid_points), ao);
    o.results.push_back(e.to_json());
    o.csv_rows.push_back(estimate_csv_row(e));
    o.text.push_back("n=" + std::to_string(n) + " " + c.family + " " + fmt(e.value));
  }
  return o;
}

inline Outcome cmd_norm_exhaustive(const RunConfig& c) {
  const auto [lo, hi] = c.range(1);
  Outcome o;
  o.csv_header = kEstimateCsvHeader;
  for (int n = lo; n <= hi; ++n) {
    const NormEstimate e = norm2_exhaustive_small(detail::make_family(c.family, n, c.grid_points));
    o.results.push_back(e.to_json());
    o.csv_rows.push_back(estimate_csv_row(e));
    o.text.push_back("n=" + std::to_string(n) + " " + c.family + " " + fmt(e.value));
  }
  return o;
}

inline Outcome cmd_norm_l1(const RunConfig& c) {
  const auto [lo, hi] = c.range(0);
  Outcome o;
  const CheckReport r = l1_norm_report(lo, hi);
  o.results.push_back(r.to_json());
  o.csv_header = "n,value";
  for (const auto& v : r.constants["values"]) {
    const std::string s = v["value"].get<std::string>();
    o.csv_rows.push_back(std::to_string(v["n"].get<int>()) + "," + s);
    o.text.push_back(lo == hi ? s : "n=" + std::to_string(v["n"].get<int>()) + " " + s);
  }
  if (!r.pass) o.text.push_back("FAIL L1-NORM");
  return o;
}

inline Outcome cmd_norm_weak(const RunConfig& c) {
  Outcome o;
  const CubeFunction f = c.input.empty() ? CubeFunction::delta(c.n, 0) : detail::load_function(c);
  const int n = f.dim();
  check_capacity(n, c.exec());
  const OperatorFamily fam = detail::make_family(c.family, n, c.grid_points);
  const double l1 = lp_norm(f, 1.0);
  const auto mf = maximal_apply(fam, f, c.exec());
  const double wr = weak_ratio(mf.values.values(), l1);
  o.results.push_back({{"kind", "weak_ratio"}, {"family", fam.descriptor()}, {"n", n}, {"weak_ratio", wr}});
  o.text.push_back("weak_ratio " + fmt(wr));
  o.add_check(marcinkiewicz_check(n, c.trials.value_or(100), c.seed, c.grid_points, c.exec()));
  return o;
}

// ---------------------------------------------------------------------------
// verify

inline double certified_decay_constant() { return decay_constants(64).c_cert; }

inline Outcome cmd_verify(const std::string& which, const RunConfig& c) {
  Outcome o;
  if (which == "abel") {
    const auto [lo, hi] = c.range(0);
    CheckReport rep("stein.abel", "STEIN-ABEL", lo, hi);
    for (int n = lo; n <= hi; ++n) rep.absorb(abel_identity_check(n));
    o.add_check(rep);
  } else if (which == "diff") {
    const auto [lo, hi] = c.range(2);
    if (hi < 2) throw UsageError("verify diff needs n >= 2");
    CheckReport rep("stein.difference", "STEIN-DIFF", std::max(lo, 2), hi);
    for (int n = std::max(lo, 2); n <= hi; ++n) rep.absorb(difference_identity_check(n));
    o.add_check(rep);
  } else if (which == "stein") {
    const auto [lo, hi] = c.range(1);
    const double c_cert = certified_decay_constant();
    CheckReport sums("stein.sums", "STEIN-D", std::max(lo, 1), hi);
    CheckReport funcs("stein.function", "STEIN-R", std::max(lo, 1), std::min(hi, 12));
    o.csv_header = "n,x,D_even,D_odd";
    double cr = 0.0;
    for (int n = std::max(lo, 1); n <= hi; ++n) {
      const SteinReport s = stein_sums(n);
      cr = std::max(cr, s.C_R);
      sums.absorb(stein_check(s, c_cert));
      for (auto& row : stein_csv_rows(s)) o.csv_rows.push_back(std::move(row));
      o.results.push_back(s.to_json());
      if (n > 12) continue;
      for (int i = 0; i < c.trials.value_or(50); ++i)
        funcs.absorb(stein_function_check(hcube::detail::ascent_start(n, i, c.seed), s, c.tolerance.value_or(1e-9), c.exec()));
    }
    sums.constants = {{"c_cert", c_cert}, {"C_R_max", cr}};
    o.add_check(sums);
    if (lo <= 12) o.add_check(funcs);
  } else if (which == "truncate") {
    const auto [lo, hi] = c.range(1);
    CheckReport rep("truncation", "TRUNCATION", std::max(lo, 1), hi);
    for (int n = std::max(lo, 1); n <= hi; ++n) {
      check_capacity(n, c.exec());
      for (int i = 0; i < c.trials.value_or(8); ++i) {
        const CubeFunction f = hcube::detail::ascent_start(n, i, c.seed);
        rep.absorb(truncation_checks(f, c.tolerance.value_or(1e-12), c.exec()));
        if (n <= 20) {
          std::vector<std::int64_t> v(f.size());
          for (std::size_t x = 0; x < v.size(); ++x) v[x] = static_cast<std::int64_t>(std::llround(f[x] * 16.0));
          rep.absorb(truncation_checks_exact(n, v));
        }
      }
    }
    o.add_check(rep);
  } else if (which == "ncompare") {
    const auto [lo, hi] = c.range(1);
    for (int n = std::max(lo, 1); n <= hi; ++n)
      for (double P : {0.05, 0.2, 0.45}) o.add_check(ncompare_decomposition(n, P));
  } else if (which == "binomlb") {
    const auto [lo, hi] = c.range(9);
    if (hi < 9) throw UsageError("verify binomlb needs n >= 9");
    o.add_check(binom_lb_sweep(std::max(lo, 9), hi));
  } else if (which == "ergodic") {
    o.add_check(ergodic_suite(c.trials.value_or(1000), c.seed, 64, 50, c.threads));
    const auto [lo, hi] = c.range(1);
    CheckReport walk("ergodic.lazy_walk", "ERGODIC-W11", std::max(lo, 1), std::min(hi, 10));
    for (int n = std::max(lo, 1); n <= std::min(hi, 10); ++n) {
      std::vector<double> delta(cube_size(n), 0.0);
      delta[0] = 1.0;
      walk.absorb(ergodic_check(lazy_walk(n), delta, 50));
    }
    o.add_check(walk);
  } else if (which == "chain") {
    const auto [lo, hi] = c.range(1);
    const double c_cert = certified_decay_constant();
    CheckReport rep("chain_bound", "CHAIN-BOUND", std::max(lo, 1), hi);
    o.csv_header = "n,C_R,total,empirical_binom_constant,empirical_total,small_n_fallback";
    for (int n = std::max(lo, 1); n <= hi; ++n) {
      const ChainBound b = chain_bound(n, c_cert);
      o.results.push_back(b.to_json());
      o.csv_rows.push_back(std::to_string(n) + "," + fmt(b.C_R) + "," + fmt(b.total) + "," +
                           fmt(b.empirical_binom_constant) + "," + fmt(b.empirical_total) + "," +
                           (b.small_n_fallback ? "true" : "false"));
      if (!std::isfinite(b.total) || b.total < b.truncation_factor * b.C_R) rep.fail("malformed bound at n=" + std::to_string(n));
      if (n <= 12) rep.absorb(chain_empirical_check(b, c.trials.value_or(8), c.seed, c.exec()));
    }
    o.add_check(rep);
  } else {
    throw UsageError("unknown verify target " + which);
  }
  return o;
}

// ---------------------------------------------------------------------------
// game

inline Outcome cmd_game(const std::string& which, const RunConfig& c) {
  Outcome o;
  if (which == "profile" || which == "center") {
    if (c.input.empty()) throw UsageError("--input marking file is required");
    const MarkingSet F = load_marking(c.input);
    check_capacity(F.dim(), c.exec());
    if (which == "profile") {
      const Vertex x = c.center.value_or(0);
      const auto p = density_profile(F, x);
      o.results.push_back({{"kind", "density_profile"}, {"n", F.dim()}, {"center", x}, {"profile", p}});
      o.csv_header = "k,fraction";
      for (std::size_t k = 0; k < p.size(); ++k) {
        o.csv_rows.push_back(std::to_string(k) + "," + fmt(p[k]));
        o.text.push_back(fmt(p[k]));
      }
    } else {
      const GameResult r = best_center(F, c.exec());
      json j = r.to_json();
      j["kind"] = std::string("best_center_") + to_string(F.kind());
      o.results.push_back(j);
      o.text.push_back("best_center " + std::to_string(r.best_center) + " value " + r.value.str() + " ratio " +
                       fmt(r.ratio()));
      if (F.kind() == MarkingKind::edge && F.dim() <= 12) o.add_check(edge_reduction_check(F));
    }
    return o;
  }
  o.csv_header = kResultCsvHeader;
  if (which == "exhaustive") {
    const int n = c.n;
    const int m_lo = c.m.value_or(0);
    const int m_hi = c.m.value_or(static_cast<int>(cube_size(std::clamp(n, 0, 4))));
    CheckReport rep("game.exhaustive", "GAME-COROLLARY", n, n);
    for (int m = m_lo; m <= m_hi; ++m) {
      const AdversaryResult r = exhaustive_adversary(n, m);
      const Fraction oracle = exhaustive_value_bruteforce(n, m);
      if (!(oracle == r.value)) rep.fail("m=" + std::to_string(m) + " disagrees with brute force");
      o.results.push_back(r.to_json());
      o.csv_rows.push_back(result_csv_row(r));
      o.text.push_back("m=" + std::to_string(m) + " value " + r.value.str() + " ratio " + fmt(r.ratio()));
    }
    o.add_check(rep);
  } else if (which == "anneal") {
    if (!c.m) throw UsageError("--m is required for game anneal");
    AnnealOptions ao;
    ao.seed = c.seed;
    ao.budget = c.budget;
    ao.chains = c.chains;
    ao.threads = c.threads;
    const AdversaryResult r = anneal_adversary(c.n, *c.m, ao);
    if (!c.marking_out.empty()) save_marking(c.marking_out, r.marking);
    o.results.push_back(r.to_json());
    o.csv_rows.push_back(result_csv_row(r));
    o.text.push_back("value " + r.value.str() + " ratio " + fmt(r.ratio()));
  } else {
    throw UsageError("unknown game command " + which);
  }
  return o;
}

// ---------------------------------------------------------------------------
// transform

inline Outcome cmd_transform(const std::string& which, const RunConfig& c) {
  const CubeFunction f = detail::load_function(c);
  Outcome o;
  if (which == "wht") {
    SpectralCoefficients s = wht(f, c.exec());
    const CubeFunction g(f.dim(), std::move(s).release());
    if (c.out.empty() || c.out == "-") {
      std::vector<double> v(g.values().begin(), g.values().end());
      o.results.push_back({{"kind", "wht"}, {"n", g.dim()}, {"coefficients", v}});
    } else {
      if (c.format == "csv") {
        std::ofstream os(c.out);
        os << "y,coefficient\n";
        for (Vertex y = 0; y < g.size(); ++y) os << y << ',' << fmt(g[y]) << '\n';
      } else {
        io::save(c.out, g, c.format == "json");
      }
      o.results.push_back({{"kind", "wht"}, {"n", g.dim()}, {"written", c.out}});
      o.out_is_data = true;
    }
    o.text.push_back("wht n=" + std::to_string(g.dim()) + " l2=" + fmt(lp_norm(g, 2.0)));
  } else if (which == "spheres") {
    const SphereSumMatrix s = sphere_means_all(f, c.exec());
    o.csv_header = "x,k,mean";
    for (Vertex x = 0; x < s.rows(); ++x)
      for (int k = 0; k <= f.dim(); ++k) o.csv_rows.push_back(std::to_string(x) + "," + std::to_string(k) + "," + fmt(s(x, k)));
    std::vector<double> flat(s.data().begin(), s.data().end());
    o.results.push_back({{"kind", "sphere_means"}, {"n", f.dim()}, {"layout", "row-major [x][k]"}, {"means", flat}});
    o.text.push_back("sphere means n=" + std::to_string(f.dim()));
  } else {
    throw UsageError("unknown transform " + which);
  }
  return o;
}

// ---------------------------------------------------------------------------
// suite

inline Outcome cmd_suite(const RunConfig& c) {
  const int hi = c.n_max.value_or(c.n);
  if (hi < 1) throw UsageError("suite needs --n-max >= 1");
  Outcome o;
  auto sub = [&](RunConfig rc, int lo, int top) {
    rc.n_min = lo;
    rc.n_max = std::min(hi, top);
    return rc;
  };
  auto take = [&](Outcome part) {
    for (auto& r : part.results)
      if (r.contains("claim_id")) o.results.push_back(std::move(r));
    for (auto& t : part.text)
      if (t.rfind("PASS ", 0) == 0 || t.rfind("FAIL ", 0) == 0) o.text.push_back(std::move(t));
  };
  RunConfig rc = c;
  rc.trials.reset();
  take(cmd_krawtchouk_verify(sub(rc, 0, 24)));
  RunConfig roots_cfg = sub(rc, 1, 40);
  roots_cfg.k_range = "half";
  take(cmd_krawtchouk_roots(roots_cfg));
  {
    Outcome d;
    const DecayConstants dc = decay_constants(64);
    d.add_check(decay_report(dc));
    d.add_check(verify_case_constants());
    take(std::move(d));
  }
  {
    Outcome l1;
    l1.add_check(l1_norm_report(0, std::min(hi, 16)));
    take(std::move(l1));
  }
  {
    Outcome m;
    CheckReport rep("maximal.marcinkiewicz", "MARCINKIEWICZ-2", 1, std::min(hi, 12));
    for (int n = 1; n <= std::min(hi, 12); ++n) rep.absorb(marcinkiewicz_check(n, 20, c.seed, c.grid_points, c.exec()));
    m.add_check(rep);
    take(std::move(m));
  }
  take(cmd_verify("abel", sub(rc, 0, 20)));
  if (hi >= 2) take(cmd_verify("diff", sub(rc, 2, 24)));
  RunConfig stein_cfg = sub(rc, 1, 64);
  stein_cfg.trials = 10;
  take(cmd_verify("stein", stein_cfg));
  RunConfig trunc_cfg = sub(rc, 1, 12);
  trunc_cfg.trials = 4;
  take(cmd_verify("truncate", trunc_cfg));
  {
    Outcome nc;
    CheckReport rep("ncompare", "N-COMPARE", 4, std::max(std::min(hi, 16), 4));
    for (int n : {4, 8, 16})
      if (n <= std::max(hi, 4))
        for (double P : {0.05, 0.2, 0.45}) rep.absorb(ncompare_decomposition(n, P));
    nc.add_check(rep);
    take(std::move(nc));
  }
  if (hi >= 9) take(cmd_verify("binomlb", sub(rc, 9, 256)));
  {
    Outcome sd;
    CheckReport rep("senate_domination", "SENATE-CHAIN", 1, std::min(hi, 12));
    for (int n = 1; n <= std::min(hi, 12); ++n)
      for (int i = 0; i < 3; ++i)
        rep.absorb(senate_domination_check(hcube::detail::ascent_start(n, i, c.seed), default_t_grid(n, c.grid_points)));
    sd.add_check(rep);
    take(std::move(sd));
  }
  take(cmd_verify("ergodic", sub(rc, 1, 10)));
  {
    Outcome g;
    g.add_check(game_values_check(std::min(hi, 8), c.seed));
    take(std::move(g));
  }
  RunConfig chain_cfg = sub(rc, 1, 64);
  chain_cfg.trials = 4;
  take(cmd_verify("chain", chain_cfg));
  return o;
}

// ---------------------------------------------------------------------------
// Reporting

inline json summarize(const std::vector<json>& results) {
  std::size_t checks = 0, passed = 0;
  std::set<std::string> claims, failed_claims;
  for (const auto& r : results) {
    if (!r.contains("pass")) continue;
    ++checks;
    const std::string id = r.value("claim_id", "");
    claims.insert(id);
    if (r["pass"].get<bool>()) {
      ++passed;
    } else {
      failed_claims.insert(id);
    }
  }
  return {{"checks", checks},
          {"passed", passed},
          {"failed", checks - passed},
          {"pass", passed == checks},
          {"claims", std::vector<std::string>(claims.begin(), claims.end())},
          {"failed_claims", std::vector<std::string>(failed_claims.begin(), failed_claims.end())}};
}

inline json build_report(const Outcome& o, const RunConfig& c, double wall_time) {
  if (o.results.empty()) throw UsageError("nothing to report");
  return {{"schema_version", kSchemaVersion},
          {"tool", "hcube"},
          {"version", kToolVersion},
          {"config", c.to_json()},
          {"results", o.results},
          {"summary", summarize(o.results)},
          {"wall_time_s", wall_time}};
}

inline std::string render_csv(const Outcome& o) {
  std::ostringstream os;
  if (!o.csv_header.empty()) {
    os << o.csv_header << '\n';
    for (const auto& r : o.csv_rows) os << r << '\n';
    return os.str();
  }
  os << "check,claim_id,n_min,n_max,pass,worst_violation\n";
  for (const auto& r : o.results) {
    if (!r.contains("pass")) continue;
    os << r["check"].get<std::string>() << ',' << r["claim_id"].get<std::string>() << ',' << r["n_range"][0] << ','
       << r["n_range"][1] << ',' << (r["pass"].get<bool>() ? "true" : "false") << ','
       << (r["worst_violation"].is_null() ? std::string("nan") : fmt(r["worst_violation"].get<double>())) << '\n';
  }
  return os.str();
}

/// Writes the report to c.out ("-" for stdout) in c.format.
inline void emit_report(const Outcome& o, const RunConfig& c, double wall_time, std::ostream& stdout_stream) {
  const json report = build_report(o, c, wall_time);
  if (c.out.empty() || o.out_is_data) return;
  const std::string body = c.format == "csv" ? render_csv(o) : report.dump(2) + "\n";
  if (c.out == "-") {
    stdout_stream << body;
    return;
  }
  std::ofstream os(c.out, std::ios::binary);
  if (!os) throw FormatError("cannot write " + c.out);
  os << body;
  if (!os) throw FormatError("write failed for " + c.out);
}

// ---------------------------------------------------------------------------
// Entry point

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Harmonic analysis and maximal inequalities on the Boolean hypercube", "hcube"};
  app.set_version_flag("--version", kToolVersion);
  app.set_config("--config", "", "TOML/INI file with option defaults (flags take precedence)");
  app.require_subcommand(1);

  RunConfig c;
  std::string leaf;
  // Shared options live on the root; subcommands pass unknown flags up.
  auto common = [&](CLI::App* s) {
    s->add_option("--n", c.n, "Cube dimension")->check(CLI::Range(0, 30));
    s->add_option("--n-min", c.n_min, "Lower end of the dimension range");
    s->add_option("--n-max", c.n_max, "Upper end of the dimension range");
    s->add_option("--seed", c.seed, "Random seed");
    s->add_option("--threads", c.threads, "Worker threads")->check(CLI::Range(1u, 256u));
    s->add_option("--out", c.out, "Report path ('-' for stdout)");
    s->add_option("--format", c.format, "Report format")->check(CLI::IsMember({"json", "csv", "bin"}));
    s->add_option("--tolerance", c.tolerance, "Tolerance override");
    s->add_option("--grid-points", c.grid_points, "Points in continuous-family grids")->check(CLI::Range(1, 100000));
    s->add_option("--restarts", c.restarts, "Norm-ascent restarts")->check(CLI::Range(1, 100000));
    s->add_option("--budget", c.budget, "Annealing moves per chain");
    s->add_option("--trials", c.trials, "Random trials per check");
    s->add_option("--chains", c.chains, "Annealing chains")->check(CLI::Range(1, 4096));
    s->add_option("--m", c.m, "Marking size");
    s->add_option("--k", c.k, "Polynomial degree");
    s->add_option("--center", c.center, "Center vertex");
    s->add_option("--input", c.input, "Input file (cube function or marking)");
    s->add_option("--family", c.family, "Operator family");
    s->add_option("--k-range", c.k_range, "Root check degrees: all or half");
    s->add_option("--marking-out", c.marking_out, "Write the annealed marking here");
    s->add_option("--max-dimension", c.max_dimension, "Dimension cap")->check(CLI::Range(0, 30));
  };
  auto group = [&](const std::string& name, const std::string& help, std::vector<std::string> leaves) {
    CLI::App* g = app.add_subcommand(name, help);
    g->require_subcommand(1);
    g->fallthrough();
    for (const auto& l : leaves) {
      CLI::App* s = g->add_subcommand(l, name + " " + l);
      s->fallthrough();
      s->callback([&, name, l] {
        c.command = name + " " + l;
        leaf = l;
      });
    }
  };
  group("krawtchouk", "Krawtchouk tables and checks", {"table", "verify", "roots", "decay"});
  group("norm", "Maximal-operator norms", {"estimate", "exhaustive", "l1", "weak"});
  group("verify", "Comparison-chain checks",
        {"abel", "diff", "stein", "truncate", "ncompare", "binomlb", "ergodic", "chain"});
  group("game", "Marking games", {"profile", "center", "exhaustive", "anneal"});
  group("transform", "Transforms of a cube function", {"wht", "spheres"});
  CLI::App* suite = app.add_subcommand("suite", "All conformance checks for an n-range");
  suite->fallthrough();
  common(&app);
  suite->callback([&] { c.command = "suite"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  }

  const auto t0 = std::chrono::steady_clock::now();
  try {
    if (c.format == "bin" && c.command.rfind("transform", 0) != 0) throw UsageError("--format bin applies to transform only");
    if (c.n_max && c.n_min && *c.n_min > *c.n_max) throw UsageError("--n-min exceeds --n-max");
    Outcome o;
    const std::string group_name = c.command.substr(0, c.command.find(' '));
    if (c.command == "suite") o = cmd_suite(c);
    else if (c.command == "krawtchouk table") o = cmd_krawtchouk_table(c);
    else if (c.command == "krawtchouk verify") o = cmd_krawtchouk_verify(c);
    else if (c.command == "krawtchouk roots") o = cmd_krawtchouk_roots(c);
    else if (c.command == "krawtchouk decay") o = cmd_krawtchouk_decay(c);
    else if (c.command == "norm estimate") o = cmd_norm_estimate(c);
    else if (c.command == "norm exhaustive") o = cmd_norm_exhaustive(c);
    else if (c.command == "norm l1") o = cmd_norm_l1(c);
    else if (c.command == "norm weak") o = cmd_norm_weak(c);
    else if (group_name == "verify") o = cmd_verify(leaf, c);
    else if (group_name == "game") o = cmd_game(leaf, c);
    else if (group_name == "transform") o = cmd_transform(leaf, c);
    else throw UsageError("no command given");
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    emit_report(o, c, wall, out);
    if (c.out != "-")
      for (const auto& line : o.text) out << line << '\n';
    return summarize(o.results)["pass"].get<bool>() ? 0 : 1;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const CapacityError& e) {
    err << "capacity error: " << e.what() << '\n';
    return 2;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << '\n';
    return 2;
  } catch (const DimensionMismatch& e) {
    err << "dimension mismatch: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    err << "invalid argument: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "invalid argument: " << e.what() << '\n';
    return 2;
  } catch (const NumericalResolutionError& e) {
    err << "numerical error: " << e.what() << '\n';
    return 1;
  } catch (const nlohmann::json::exception& e) {
    err << "format error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace hcube::cli
