// Acceptance runner: one PASS/FAIL line per criterion.
//   acceptance                 run all criteria
//   acceptance --criterion N   run criterion N only

#include <sys/resource.h>

#include <CLI11.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "hcube/comparison.hpp"
#include "hcube/games.hpp"
#include "hcube/krawtchouk.hpp"
#include "hcube/maximal.hpp"
#include "oracles.hpp"

using namespace hcube;

namespace {

constexpr std::uint64_t kSeed = 20240607;

struct Verdict {
  bool pass = true;
  std::string detail;
};

class Clock {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

unsigned hardware_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

Verdict krawtchouk_exact() {
  Clock clock;
  Verdict v;
  for (int n = 0; n <= 24; ++n) {
    const KrawtchoukTable t(n);
    const auto sym = verify_symmetries(t);
    const auto ortho = verify_orthogonality(t);
    if (!sym.pass || !ortho.pass) {
      v.pass = false;
      v.detail += fmt("n=%d discrepancy; ", n);
    }
  }
  const double s = clock.seconds();
  if (s >= 60.0) v.pass = false;
  v.detail += fmt("symmetry, reflection, orthogonality exact for n<=24 in %.2fs (limit 60s)", s);
  return v;
}

Verdict root_range() {
  const auto all = verify_roots(1, 40, 1e-9);
  const auto half = verify_roots(1, 40, 1e-9, 1e-8, true);
  Verdict v;
  v.pass = all.pass;
  v.detail = fmt("all k: %zu violations, worst excess %.6g at %s; k<=n/2 only: %s", all.violation_count,
                 all.worst_violation, all.worst_case.dump().c_str(), half.pass ? "no violations" : "violations");
  return v;
}

Verdict decay_bound() {
  const auto d = decay_constants(64);
  Verdict v;
  v.pass = d.bound_holds && d.c2 > 0.0 && std::isfinite(d.c_cert) && d.c_cert > 0.0;
  // Independent recheck of the bound from the exact tables.
  for (int n = 2; n <= 64; ++n) {
    const KrawtchoukTable t(n);
    for (int k = 0; k <= n / 2; ++k)
      for (int x = 0; x <= n / 2; ++x)
        if (std::abs(to_double(t.exact(k, x))) > std::exp(-d.c_cert * k * x / n) * (1.0 + 1e-12)) v.pass = false;
  }
  v.detail = fmt("c_cert=%.12g c2=%.12g (n<100) worst |kappa|/bound=%.12g", d.c_cert, d.c2, d.worst_bound_ratio);
  return v;
}

Verdict case_constants() {
  const auto r = verify_case_constants();
  const double ln2 = std::numbers::ln2;
  const double h = -0.14 * std::log(0.14) - 0.86 * std::log(0.86);
  const double y2 = 4.0 * 0.14 * 0.86;
  const double c1 = 2.0 * h - ln2;
  Verdict v;
  v.pass = r.pass && h > ln2 / 2 && y2 / (1 - y2) <= 0.93 && c1 > 0.116 && c1 >= 2 * std::log(200.0) / 100.0;
  v.detail = fmt("H2(0.14)=%.10f > %.10f; y^2/(1-y^2)=%.10f <= 0.93; c1=%.10f > 0.116; 2ln(200)/100=%.10f", h,
                 ln2 / 2, y2 / (1 - y2), c1, 2 * std::log(200.0) / 100.0);
  return v;
}

Verdict l1_norm() {
  Verdict v;
  std::string values;
  for (int n = 0; n <= 16; ++n) {
    const Rational r = l1_norm_check(n);
    if (r != n + 1) v.pass = false;
    values += r.str() + (n < 16 ? "," : "");
  }
  v.detail = "||M_S delta||_1 for n=0..16: " + values;
  return v;
}

Verdict stein() {
  Verdict v;
  for (int n = 0; n <= 20; ++n)
    if (!abel_identity_check(n).pass) v.pass = false;
  for (int n = 2; n <= 20; ++n)
    if (!difference_identity_check(n).pass) v.pass = false;
  const double c_cert = decay_constants(64).c_cert;
  double worst_cap = -INFINITY;
  for (int n = 1; n <= 64; ++n) {
    const auto rep = stein_check(stein_sums(n), c_cert);
    if (!rep.pass) v.pass = false;
    if (!rep.worst_case.is_null()) worst_cap = std::max(worst_cap, rep.worst_violation);
  }
  std::mt19937_64 rng(kSeed);
  double worst_ratio = 0.0;
  int cesaro_breaks = 0, tested = 0;
  for (int n = 1; n <= 12; ++n) {
    const auto s = stein_sums(n);
    for (int i = 0; i < 500; ++i) {
      const CubeFunction f(n, oracle::random_nonnegative(n, rng));
      const auto rep = stein_function_check(f, s);
      ++tested;
      if (!rep.pass) v.pass = false;
      const double denom = s.C_R * lp_norm(f, 2.0);
      const double gap = rep.constants["gap_norm"].get<double>();
      if (denom > 0.0) worst_ratio = std::max(worst_ratio, gap / denom);
      else if (gap > 1e-12) v.pass = false;
      if (rep.constants["full_cesaro_excess"].get<double>() > 1e-12) ++cesaro_breaks;
    }
  }
  v.detail = fmt("identities exact n<=20; max(D - 24/c^2 - 1)=%.4g; %d functions, max gap/(C_R||f||)=%.4g; "
                 "plain Cesaro average over all radii exceeds the R bound on %d of them",
                 worst_cap, tested, worst_ratio, cesaro_breaks);
  return v;
}

Verdict ergodic() {
  Clock clock;
  Verdict v;
  const auto suite = ergodic_suite(1000, kSeed, 64, 50, hardware_threads());
  v.pass = suite.pass;
  double worst_walk = 0.0;
  std::mt19937_64 rng(kSeed);
  for (int n = 1; n <= 10; ++n) {
    const auto A = lazy_walk(n);
    std::vector<std::vector<double>> fs;
    std::vector<double> d(cube_size(n), 0.0);
    d[0] = 1.0;
    fs.push_back(d);
    for (int i = 0; i < 4; ++i) fs.push_back(oracle::random_signed(cube_size(n), rng));
    for (const auto& f : fs) {
      const auto rep = ergodic_check(A, f, 50);
      if (!rep.pass) v.pass = false;
      worst_walk = std::max(worst_walk, rep.constants["worst_ratio"].get<double>());
    }
  }
  const double s = clock.seconds();
  if (s >= 300.0) v.pass = false;
  v.detail = fmt("1000 random instances worst ratio %.12g; lazy walk n<=10 worst %.12g; %.1fs (limit 300s)",
                 suite.constants["worst_ratio"].get<double>(), worst_walk, s);
  return v;
}

Verdict marcinkiewicz() {
  Verdict v;
  double worst = 0.0;
  std::size_t violations = 0;
  for (int n = 1; n <= 14; ++n) {
    const auto rep = marcinkiewicz_check(n, 1000, kSeed, 64, {kDefaultMaxDimension, hardware_threads()});
    violations += rep.violation_count;
    if (!rep.pass) v.pass = false;
    worst = std::max(worst, rep.constants["worst_ratio"].get<double>());
  }
  v.detail = fmt("n<=14, 1000 f each, 64-point grid: worst ratio %.6f vs 2sqrt2=%.6f, %zu violations", worst,
                 marcinkiewicz_bound(2.0), violations);
  return v;
}

Verdict binomial_lower_bound() {
  Clock clock;
  const auto sweep = binom_lb_sweep(9, 256);
  Verdict v;
  v.pass = sweep.pass;
  // a_k against adaptive quadrature of the binomial density.
  double worst_rel = 0.0;
  for (int n : {9, 17, 64, 128, 256})
    for (int K : {1, 2, n / 8, n / 4, n / 2}) {
      if (K < 1) continue;
      const double P = window_parameter(n, K);
      const auto a = senate_noise_coeff(n, K);
      for (int k = 0; k <= K; ++k) {
        const double q = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
                             [n, k](double p) { return binomial_pmf(n, p, k); }, 0.0, P, 10, 1e-13) /
                         P;
        worst_rel = std::max(worst_rel, std::abs(a[k] - q) / q);
      }
    }
  if (worst_rel > 1e-11) v.pass = false;
  const double s = clock.seconds();
  if (s >= 600.0) v.pass = false;
  v.detail = fmt("9<=n<=256 all K,k: %zu violations, empirical constant %.6g vs 3e^20=%.6g; a_k vs quadrature "
                 "max rel err %.3g; %.1fs (limit 600s)",
                 sweep.violation_count, sweep.constants["empirical_binom"].get<double>(), kBinomConstant, worst_rel, s);
  return v;
}

Verdict ncompare() {
  Verdict v;
  double worst_mass = 0.0, worst_profile = 0.0;
  for (int n : {4, 8, 16})
    for (double P : {0.05, 0.2, 0.45}) {
      const auto rep = ncompare_decomposition(n, P);
      if (!rep.pass) v.pass = false;
      worst_mass = std::max(worst_mass, std::abs(rep.constants["mass"].get<double>() - 1.0));
      worst_profile = std::max(worst_profile, rep.constants["profile_residual"].get<double>());
    }
  v.detail = fmt("weights nonnegative; max |mass-1|=%.3g (tol 1e-10); max profile residual %.3g (tol 1e-8)",
                 worst_mass, worst_profile);
  return v;
}

Verdict norm_estimates() {
  Verdict v;
  const std::string path = std::string(HCUBE_TEST_DATA_DIR) + "/norm_table.json";
  nlohmann::json table = nlohmann::json::array();
  double lowest = INFINITY;
  for (int n = 1; n <= 14; ++n) {
    const auto fam = spherical_family(KrawtchoukTable(n), n);
    AscentOptions ao;
    ao.seed = kSeed;
    ao.threads = hardware_threads();
    const auto est = norm2_ascent(fam, ao);
    lowest = std::min(lowest, est.value - std::numbers::sqrt2);
    if (est.value < std::numbers::sqrt2 - 1e-6) v.pass = false;
    double exhaustive = NAN;
    if (n <= 3) {
      exhaustive = norm2_exhaustive_small(fam).value;
      if (std::abs(exhaustive - est.value) > 1e-3) v.pass = false;
      if (n == 1 && std::abs(exhaustive - std::numbers::sqrt2) > 1e-6) v.pass = false;
    }
    table.push_back({{"n", n}, {"ascent", est.value}, {"exhaustive", json_number(exhaustive)}});
  }
  std::string pin;
  if (std::filesystem::exists(path)) {
    std::ifstream in(path);
    const auto pinned = nlohmann::json::parse(in);
    double drift = 0.0;
    for (std::size_t i = 0; i < table.size(); ++i)
      drift = std::max(drift, std::abs(pinned.at(i)["ascent"].get<double>() - table[i]["ascent"].get<double>()));
    if (drift > 1e-9) v.pass = false;
    pin = fmt("max drift from pinned table %.3g", drift);
  } else {
    std::ofstream(path) << table.dump(2) << '\n';
    pin = "table pinned to " + path;
  }
  std::string values;
  for (const auto& row : table) values += fmt(values.empty() ? "%.6f" : " %.6f", row["ascent"].get<double>());
  v.detail = fmt("min(estimate - sqrt2)=%.3g; ", lowest) + pin + "; n=1..14: " + values;
  return v;
}

Verdict chain() {
  Verdict v;
  const double c_cert = decay_constants(64).c_cert;
  const double dominant = 3.0 * std::exp(20.0) * 2.0 * std::numbers::sqrt2;
  double worst_formula = 0.0, worst_observed = 0.0;
  for (int n = 1; n <= 64; ++n) {
    const auto b = chain_bound(n, c_cert);
    const double expect = n < 9 ? n + 1.0 : std::numbers::sqrt2 * (b.C_R + dominant);
    worst_formula = std::max(worst_formula, std::abs(b.total - expect) / expect);
    if (std::abs(b.total - expect) > 1e-12 * expect) v.pass = false;
    if (n >= 9 && !(b.total > dominant * std::numbers::sqrt2)) v.pass = false;
    if (n <= 14) {
      const auto rep = chain_empirical_check(b, n <= 12 ? 100 : 10, kSeed);
      if (!rep.pass) v.pass = false;
      worst_observed = std::max(worst_observed, rep.constants["observed_ratio"].get<double>() / b.total);
    }
  }
  v.detail = fmt("bound assembled for n=1..64, max formula rel err %.3g; total(16)=%.10g; max observed/bound %.3g",
                 worst_formula, chain_bound(16, c_cert).total, worst_observed);
  return v;
}

Verdict games() {
  const auto rep = game_values_check(8, kSeed);
  Verdict v;
  v.pass = rep.pass && exhaustive_adversary(3, 1).value == Fraction(1, 3) &&
           exhaustive_adversary(4, 1).value == Fraction(1, 6);
  std::string n4;
  for (const auto& row : rep.constants["table"])
    if (row["n"] == 4) n4 += (n4.empty() ? "" : " ") + row["value"].get<std::string>();
  v.detail = fmt("%zu violations; singletons 1/3 (n=3), 1/6 (n=4); n=4 values by m: ", rep.violation_count) + n4;
  return v;
}

Verdict performance() {
  Verdict v;
  const unsigned threads = hardware_threads();
  const ExecOptions opts{kDefaultMaxDimension, threads};
  std::mt19937_64 rng(kSeed);
  const int n = 20;
  const CubeFunction f(n, oracle::random_nonnegative(n, rng));
  Clock c1;
  const auto s = sphere_means_all(f, opts);
  const auto m = maximal_apply(spherical_family(KrawtchoukTable(n), n), f, opts);
  const double t1 = c1.seconds();
  const CubeFunction g(24, oracle::random_signed(cube_size(24), rng));
  Clock c2;
  const auto c = wht(g, opts);
  const double t2 = c2.seconds();
  rusage ru{};
  getrusage(RUSAGE_SELF, &ru);
  const double gib = ru.ru_maxrss / (1024.0 * 1024.0);
  v.pass = t1 < 60.0 && t2 < 30.0 && gib < 4.0 && s.rows() == f.size() && m.values.size() == f.size() &&
           c.size() == g.size();
  v.detail = fmt("%u thread(s): n=20 sphere means + maximal %.2fs (limit 60s); n=24 wht %.2fs (limit 30s); "
                 "peak RSS %.2f GiB (limit 4)",
                 threads, t1, t2, gib);
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  int only = 0;
  app.add_option("--criterion", only, "Run one criterion (1-14)")->check(CLI::Range(1, 14));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
      {"Krawtchouk exact suite", krawtchouk_exact},
      {"root range, all k", root_range},
      {"decay bound", decay_bound},
      {"case constants", case_constants},
      {"l1 norm n+1", l1_norm},
      {"Stein identities and error term", stein},
      {"ergodic weak (1,1)", ergodic},
      {"Marcinkiewicz endpoint", marcinkiewicz},
      {"binomial lower bound", binomial_lower_bound},
      {"N-compare decomposition", ncompare},
      {"norm estimates", norm_estimates},
      {"chain bound", chain},
      {"games", games},
      {"performance", performance},
  };
  bool all_pass = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only != 0 && static_cast<int>(i) + 1 != only) continue;
    Clock clock;
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    all_pass = all_pass && v.pass;
    std::printf("AC-%zu %s %s: %s [%.1fs]\n", i + 1, v.pass ? "PASS" : "FAIL", criteria[i].first, v.detail.c_str(),
                clock.seconds());
    std::fflush(stdout);
  }
  return all_pass ? 0 : 1;
}
