#pragma once

// Checks for the comparison chain
//   M_S  ->  M_S_bar  ->  M_Sen(S_bar)  ->  M_Sen(N~)  ->  M_Sen(N)
// and the explicit operator-norm bound it produces.
//
// Radial identities are checked on spectral profiles (eigenvalue per level),
// exactly where the Krawtchouk table allows it.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "hcube/cube_core.hpp"
#include "hcube/detail/parallel.hpp"
#include "hcube/krawtchouk.hpp"
#include "hcube/maximal.hpp"
#include "hcube/radial_ops.hpp"
#include "hcube/report.hpp"

namespace hcube {

enum class Parity { even = 0, odd = 1 };

inline const char* to_string(Parity p) { return p == Parity::even ? "even" : "odd"; }

/// Largest r used by the even (radii 2r) or odd (radii 2r+1) error term:
/// floor(floor(n/2)/2) and floor((floor(n/2)-1)/2). The odd value is -1 for n < 2.
inline int r_max(int n, Parity p) {
  const int h = n / 2;
  if (p == Parity::even) return h / 2;
  return h >= 1 ? (h - 1) / 2 : -1;
}

// ---------------------------------------------------------------------------
// Exact identities

/// S_{2r+e} - (1/(r+1)) sum_{k<=r} S_{2k+e} = (1/(r+1)) sum_{k=1}^r k (S_{2k+e} - S_{2k-2+e})
/// on every level x, for both parities e and every r <= r_max.
inline CheckReport abel_identity_check(int n) {
  if (n < 0) throw DomainError("abel_identity_check: n must be >= 0");
  CheckReport rep("stein.abel", "STEIN-ABEL", n, n);
  rep.params = {{"mode", "rational"}};
  const KrawtchoukTable t(n);
  Rational worst = 0;
  for (Parity par : {Parity::even, Parity::odd}) {
    const int e = static_cast<int>(par);
    for (int r = 0; r <= r_max(n, par); ++r) {
      for (int x = 0; x <= n; ++x) {
        Rational sum = 0;
        Rational abel = 0;
        for (int k = 0; k <= r; ++k) {
          sum += t.exact(2 * k + e, x);
          if (k >= 1) abel += k * (t.exact(2 * k + e, x) - t.exact(2 * k - 2 + e, x));
        }
        const Rational lhs = t.exact(2 * r + e, x) - sum / (r + 1);
        const Rational rhs = abel / (r + 1);
        const Rational diff = abs(lhs - rhs);
        if (diff > worst) worst = diff;
        if (diff != 0) rep.fail(std::string(to_string(par)) + " r=" + std::to_string(r) + " x=" + std::to_string(x));
      }
    }
  }
  rep.observe(to_double(worst), {{"n", n}});
  rep.constants = {{"max_residual", to_double(worst)}};
  return rep;
}

/// kappa_x(l) - kappa_x(l-1) = -(2x/n) kappa^{(n-1)}_{x-1}(l-1), and
/// kappa_x(l) - kappa_x(l-2) = -(4x/n)((n-x)/(n-1)) kappa^{(n-2)}_{x-1}(l-2),
/// exactly. For x = n the second right-hand side vanishes with its factor n - x.
inline CheckReport difference_identity_check(int n) {
  if (n < 2) throw DomainError("difference_identity_check: n must be >= 2");
  CheckReport rep("stein.difference", "STEIN-DIFF", n, n);
  rep.params = {{"mode", "rational"}};
  const KrawtchoukTable t(n);
  const KrawtchoukTable t1(n - 1);
  const KrawtchoukTable t2(n - 2);
  Rational worst = 0;
  auto record = [&](const Rational& diff, const char* which, int x, int l) {
    if (diff > worst) worst = diff;
    if (diff != 0) rep.fail(std::string(which) + " x=" + std::to_string(x) + " l=" + std::to_string(l));
  };
  for (int x = 1; x <= n; ++x) {
    for (int l = 1; l <= n; ++l) {
      const Rational one = t.exact(x, l) - t.exact(x, l - 1);
      const Rational rhs1 = Rational(-2 * x, n) * t1.exact(x - 1, l - 1);
      record(abs(one - rhs1), "one-step", x, l);
      if (l < 2) continue;
      const Rational two = t.exact(x, l) - t.exact(x, l - 2);
      const Rational via_one = Rational(-2 * x, n) * (t1.exact(x - 1, l - 1) + t1.exact(x - 1, l - 2));
      Rational rhs2 = 0;
      if (x < n) rhs2 = Rational(-4 * x, n) * Rational(n - x, n - 1) * t2.exact(x - 1, l - 2);
      record(abs(two - via_one), "two-step (sum of one-steps)", x, l);
      record(abs(two - rhs2), "two-step", x, l);
    }
  }
  rep.observe(to_double(worst), {{"n", n}});
  rep.constants = {{"max_residual", to_double(worst)}};
  return rep;
}

// ---------------------------------------------------------------------------
// Error-term sums

struct SteinReport {
  int n = 0;
  int r_max_even = 0;
  int r_max_odd = 0;
  std::vector<double> D_even;
  std::vector<double> D_odd;
  double C_R = 0.0;
  json identity_residuals = json::object();

  json to_json() const {
    return {{"n", n},
            {"r_max_even", r_max_even},
            {"r_max_odd", r_max_odd},
            {"D_even", D_even},
            {"D_odd", D_odd},
            {"C_R", C_R},
            {"identity_residuals", identity_residuals}};
  }
};

namespace detail {

// D_e[x] = sum_{k=1}^{r_max} k (kappa_{2k+e}(x) - kappa_{2k-2+e}(x))^2, exactly.
inline std::vector<Rational> stein_sum_exact(const KrawtchoukTable& t, Parity par) {
  const int n = t.dim();
  const int e = static_cast<int>(par);
  std::vector<Rational> d(n + 1, Rational(0));
  for (int x = 0; x <= n; ++x) {
    for (int k = 1; k <= r_max(n, par); ++k) {
      const Rational diff = t.exact(2 * k + e, x) - t.exact(2 * k - 2 + e, x);
      d[x] += k * diff * diff;
    }
  }
  return d;
}

// The same sum through the two-step difference formula and the (n-2)-table.
inline std::vector<Rational> stein_sum_collapsed(int n, const KrawtchoukTable* t2, Parity par) {
  const int e = static_cast<int>(par);
  std::vector<Rational> d(n + 1, Rational(0));
  if (n < 2) return d;
  for (int x = 1; x < n; ++x) {
    const Rational factor = Rational(4 * x * (n - x), n * (n - 1));
    for (int k = 1; k <= r_max(n, par); ++k) {
      const Rational v = factor * t2->exact(x - 1, 2 * k - 2 + e);
      d[x] += k * v * v;
    }
  }
  return d;
}

}  // namespace detail

/// D_even, D_odd per level with the collapsed-form cross-check and
/// C_R = sqrt(max_x (D_even[x] + D_odd[x]) / 2).
inline SteinReport stein_sums(int n) {
  if (n < 1) throw DomainError("stein_sums: n must be >= 1");
  const KrawtchoukTable t(n);
  SteinReport s;
  s.n = n;
  s.r_max_even = r_max(n, Parity::even);
  s.r_max_odd = r_max(n, Parity::odd);
  std::unique_ptr<KrawtchoukTable> t2;
  if (n >= 2) t2 = std::make_unique<KrawtchoukTable>(n - 2);
  Rational collapse = 0;
  double worst_sum = 0.0;
  for (Parity par : {Parity::even, Parity::odd}) {
    const auto direct = detail::stein_sum_exact(t, par);
    const auto collapsed = detail::stein_sum_collapsed(n, t2.get(), par);
    auto& out = (par == Parity::even) ? s.D_even : s.D_odd;
    out.resize(n + 1);
    for (int x = 0; x <= n; ++x) {
      out[x] = to_double(direct[x]);
      const Rational diff = abs(direct[x] - collapsed[x]);
      if (diff > collapse) collapse = diff;
    }
  }
  // Level 1: the sum reduces to sum_{k=1}^{r_max} 16 k / n^2.
  Rational level_one = 0;
  if (n >= 2) {
    const auto de = detail::stein_sum_exact(t, Parity::even);
    const auto dodd = detail::stein_sum_exact(t, Parity::odd);
    for (Parity par : {Parity::even, Parity::odd}) {
      const int r = r_max(n, par);
      const Rational closed = r >= 1 ? Rational(16 * r * (r + 1) / 2, n * n) : Rational(0);
      const Rational& got = par == Parity::even ? de[1] : dodd[1];
      const Rational diff = abs(got - closed);
      if (diff > level_one) level_one = diff;
    }
  }
  for (int x = 0; x <= n; ++x) worst_sum = std::max(worst_sum, 0.5 * (s.D_even[x] + s.D_odd[x]));
  s.C_R = std::sqrt(worst_sum);
  s.identity_residuals = {{"collapsed_form", to_double(collapse)}, {"level_one_closed_form", to_double(level_one)}};
  return s;
}

/// Conformance of the D sums: collapsed form and level-one closed form exact,
/// D >= 0, D[0] = 0, and D[x] <= 24/c_cert^2 + 1 for 1 <= x <= n/2.
inline CheckReport stein_check(const SteinReport& s, double c_cert) {
  CheckReport rep("stein.sums", "STEIN-D", s.n, s.n);
  const double cap = 24.0 / (c_cert * c_cert) + 1.0;
  rep.params = {{"c_cert", c_cert}};
  rep.constants = {{"c_cert", c_cert}, {"C_R", s.C_R}, {"D_cap", cap}};
  for (const auto& [name, v] : s.identity_residuals.items()) {
    if (v.get<double>() != 0.0) rep.fail(name + " residual " + std::to_string(v.get<double>()));
  }
  for (int x = 0; x <= s.n; ++x) {
    for (Parity par : {Parity::even, Parity::odd}) {
      const double d = (par == Parity::even ? s.D_even : s.D_odd)[x];
      if (d < 0.0) rep.fail("negative D at x=" + std::to_string(x));
      if (x == 0 && d != 0.0) rep.fail("D[0] nonzero");
      if (x >= 1 && 2 * x <= s.n) {
        rep.observe(d - cap, {{"n", s.n}, {"x", x}, {"parity", to_string(par)}});
        if (d > cap) rep.fail(std::string(to_string(par)) + " D[" + std::to_string(x) + "] exceeds cap");
      }
    }
  }
  return rep;
}

/// D tables as CSV rows "n,x,D_even,D_odd".
inline std::vector<std::string> stein_csv_rows(const SteinReport& s) {
  std::vector<std::string> rows;
  char buf[128];
  for (int x = 0; x <= s.n; ++x) {
    std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g", s.n, x, s.D_even[x], s.D_odd[x]);
    rows.emplace_back(buf);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Error-term operators

/// pi_x R_e f = sqrt((1/2) sum_{k=1}^{r_max} k [pi_x (S_{2k+e} - S_{2k-2+e}) f]^2).
inline CubeFunction r_operator_apply(const SphereSumMatrix& s, Parity par) {
  const int n = s.dim();
  const int e = static_cast<int>(par);
  const int r = r_max(n, par);
  std::vector<double> out(s.rows());
  for (Vertex x = 0; x < s.rows(); ++x) {
    double acc = 0.0;
    for (int k = 1; k <= r; ++k) {
      const double d = s(x, 2 * k + e) - s(x, 2 * k - 2 + e);
      acc += k * d * d;
    }
    out[x] = std::sqrt(0.5 * acc);
  }
  return CubeFunction(n, std::move(out));
}

inline CubeFunction r_operator_apply(const CubeFunction& f, Parity par, const ExecOptions& opts = {}) {
  return r_operator_apply(sphere_means_all(f, opts), par);
}

/// ||R_e f||_2^2 = (1/2) sum_x ||E_x f||_2^2 D_e[x].
inline double r_norm_sq_spectral(std::span<const double> energies, std::span<const double> D) {
  double acc = 0.0;
  for (std::size_t x = 0; x < energies.size(); ++x) acc += energies[x] * D[x];
  return 0.5 * acc;
}

namespace detail {

// Parity-split Cesaro average (1/(r+1)) sum_{j<=r} s(x, 2j+e) at radius 2r+e.
inline double parity_senate(std::span<const double> row, int radius) {
  const int e = radius % 2;
  const int r = radius / 2;
  double acc = 0.0;
  for (int j = 0; j <= r; ++j) acc += row[2 * j + e];
  return acc / (r + 1);
}

}  // namespace detail

/// Stein comparison on one function:
///   |pi_x (S_l - Sen_l) f| <= pi_x R f  for l <= n/2 (Sen_l the parity-split average),
///   ||M_S_bar f - M_Sen(S_bar) f||_2 <= sqrt(||R_0 f||^2 + ||R_1 f||^2) <= C_R ||f||_2,
///   ||R_e f||^2 matching the spectral formula.
/// The same norm gap with the plain Cesaro average over all radii is reported
/// as `full_cesaro_excess` without being asserted.
inline CheckReport stein_function_check(const CubeFunction& f, const SteinReport& stein, double rel_tol = 1e-9,
                                        const ExecOptions& opts = {}) {
  const int n = f.dim();
  if (stein.n != n) throw DimensionMismatch("stein_function_check: report for another dimension");
  CheckReport rep("stein.function", "STEIN-R", n, n);
  rep.params = {{"rel_tol", rel_tol}};
  const SphereSumMatrix s = sphere_means_all(f, opts);
  const CubeFunction r0 = r_operator_apply(s, Parity::even);
  const CubeFunction r1 = r_operator_apply(s, Parity::odd);
  const double f2 = lp_norm(f, 2.0);
  const double scale = std::max(lp_norm(f, std::numeric_limits<double>::infinity()), 1e-300);
  const int h = n / 2;
  std::vector<double> gap_par(f.size());
  std::vector<double> gap_full(f.size());
  double pointwise = -std::numeric_limits<double>::infinity();
  for (Vertex x = 0; x < f.size(); ++x) {
    const auto row = s.row(x);
    const double rx = std::max(r0[x], r1[x]);
    double m = row[0], m_par = row[0], m_full = row[0], running = 0.0;
    for (int l = 0; l <= h; ++l) {
      const double sen = detail::parity_senate(row, l);
      running += row[l];
      m = std::max(m, row[l]);
      m_par = std::max(m_par, sen);
      m_full = std::max(m_full, running / (l + 1));
      pointwise = std::max(pointwise, std::abs(row[l] - sen) - rx);
    }
    gap_par[x] = m - m_par;
    gap_full[x] = m - m_full;
  }
  if (pointwise > 1e-12 * scale) rep.fail("pointwise |(S_l - Sen_l) f| exceeds R f");
  const double n0 = lp_norm(r0, 2.0);
  const double n1 = lp_norm(r1, 2.0);
  const double rnorm = std::sqrt(n0 * n0 + n1 * n1);
  const double gap = lp_norm(gap_par, 2.0);
  const double slack = 1e-12 * scale * std::sqrt(static_cast<double>(f.size()));
  if (gap > rnorm + slack) rep.fail("||M_S_bar f - M_Sen f|| exceeds the R bound");
  if (rnorm > stein.C_R * f2 * (1.0 + rel_tol) + slack) rep.fail("R bound exceeds C_R ||f||");
  const auto energies = level_energies(f, opts);
  double parseval = 0.0;
  for (Parity par : {Parity::even, Parity::odd}) {
    const double spectral = r_norm_sq_spectral(energies, par == Parity::even ? stein.D_even : stein.D_odd);
    const double direct = par == Parity::even ? n0 * n0 : n1 * n1;
    const double rel = std::abs(spectral - direct) / std::max({spectral, direct, f2 * f2 * 1e-300, 1e-300});
    if (std::max(spectral, direct) > 1e-14 * f2 * f2) parseval = std::max(parseval, rel);
  }
  if (parseval > rel_tol) rep.fail("Parseval mismatch " + std::to_string(parseval));
  rep.observe(gap - rnorm, {{"n", n}});
  rep.constants = {{"gap_norm", gap},
                   {"R_norm", rnorm},
                   {"C_R", stein.C_R},
                   {"pointwise_excess", pointwise},
                   {"parseval_rel_error", parseval},
                   {"full_cesaro_excess", lp_norm(gap_full, 2.0) - rnorm}};
  return rep;
}

// ---------------------------------------------------------------------------
// Truncation

namespace detail {

inline void require_nonnegative(std::span<const double> f, const char* what) {
  for (double v : f)
    if (v < 0.0) throw DomainError(std::string(what) + ": f must be nonnegative");
}

}  // namespace detail

/// max{M_S_bar f, iota M_S_bar f} = M_S f pointwise, and
/// Sen(S)_k f <= Sen(S)_{floor(n/2)} (f + iota f) for every k > floor(n/2).
inline CheckReport truncation_checks(const CubeFunction& f, double tol = 1e-12, const ExecOptions& opts = {}) {
  detail::require_nonnegative(f.values(), "truncation_checks");
  const int n = f.dim();
  const int h = n / 2;
  CheckReport rep("truncation", "TRUNCATION", n, n);
  rep.params = {{"mode", "float"}, {"tol", tol}};
  const SphereSumMatrix s = sphere_means_all(f, opts);
  const double scale = std::max(lp_norm(f, std::numeric_limits<double>::infinity()), 1e-300);
  const Vertex all = cube_size(n) - 1;
  std::vector<double> m_bar(f.size());
  for (Vertex x = 0; x < f.size(); ++x) {
    const auto row = s.row(x);
    m_bar[x] = *std::max_element(row.begin(), row.begin() + h + 1);
  }
  double worst_max = 0.0;
  double worst_sen = -std::numeric_limits<double>::infinity();
  for (Vertex x = 0; x < f.size(); ++x) {
    const auto row = s.row(x);
    const auto flip = s.row(x ^ all);
    const double m_full = *std::max_element(row.begin(), row.end());
    worst_max = std::max(worst_max, std::abs(std::max(m_bar[x], m_bar[x ^ all]) - m_full));
    double rhs = 0.0;
    for (int l = 0; l <= h; ++l) rhs += row[l] + flip[l];
    rhs /= h + 1;
    double acc = 0.0;
    for (int k = 0; k <= n; ++k) {
      acc += row[k];
      if (k > h) worst_sen = std::max(worst_sen, acc / (k + 1) - rhs);
    }
  }
  if (worst_max > tol * scale) rep.fail("max{M_S_bar f, iota M_S_bar f} differs from M_S f");
  if (worst_sen > tol * scale) rep.fail("Sen(S)_k f exceeds Sen(S)_{n/2}(f + iota f)");
  rep.observe(std::max(worst_max, worst_sen), {{"n", n}});
  rep.constants = {{"max_identity_residual", worst_max}, {"senate_excess", json_number(worst_sen)}};
  return rep;
}

/// Exact version for integer-valued f, n <= 20.
inline CheckReport truncation_checks_exact(int n, std::span<const std::int64_t> f) {
  if (n > 20) throw CapacityError("truncation_checks_exact: n must be <= 20");
  for (auto v : f)
    if (v < 0) throw DomainError("truncation_checks_exact: f must be nonnegative");
  CheckReport rep("truncation", "TRUNCATION", n, n);
  rep.params = {{"mode", "exact"}};
  const int h = n / 2;
  const std::size_t w = static_cast<std::size_t>(n) + 1;
  const auto c = sphere_sums<std::int64_t>(n, f);
  // Common denominator for the means: L = lcm_k C(n,k).
  std::int64_t L = 1;
  for (int k = 0; k <= n; ++k) L = std::lcm(L, binomial_i64(n, k));
  std::vector<std::int64_t> scaled(c.size());
  for (std::size_t x = 0; x < cube_size(n); ++x)
    for (int k = 0; k <= n; ++k) scaled[x * w + k] = c[x * w + k] * (L / binomial_i64(n, k));
  const Vertex all = cube_size(n) - 1;
  auto row_max = [&](Vertex x, int top) {
    std::int64_t m = scaled[x * w];
    for (int k = 1; k <= top; ++k) m = std::max(m, scaled[x * w + k]);
    return m;
  };
  std::size_t bad_max = 0;
  std::size_t bad_sen = 0;
  for (Vertex x = 0; x < cube_size(n); ++x) {
    if (std::max(row_max(x, h), row_max(x ^ all, h)) != row_max(x, n)) ++bad_max;
    __int128 rhs = 0;
    for (int l = 0; l <= h; ++l) rhs += scaled[x * w + l] + scaled[(x ^ all) * w + l];
    __int128 acc = 0;
    for (int k = 0; k <= n; ++k) {
      acc += scaled[x * w + k];
      if (k > h && acc * (h + 1) > rhs * (k + 1)) ++bad_sen;
    }
  }
  if (bad_max) rep.fail("max identity fails at " + std::to_string(bad_max) + " vertices");
  if (bad_sen) rep.fail("senate truncation fails " + std::to_string(bad_sen) + " times");
  rep.observe(static_cast<double>(bad_max + bad_sen), {{"n", n}});
  return rep;
}

// ---------------------------------------------------------------------------
// Sen(N~)_P as a nonnegative combination of Sen(N)_T

/// Sen(N~)_P = tau f(tau) Sen(N)_tau + int_0^tau (-T f'(T)) Sen(N)_T dT,
/// f(t) = e^{-t}/(2P), tau = -ln(1 - 2P).
inline CheckReport ncompare_decomposition(int n, double P, double mass_tol = 1e-10, double profile_tol = 1e-8) {
  if (!(P > 0.0 && P < 0.5)) throw DomainError("ncompare_decomposition: P must lie in (0, 1/2)");
  CheckReport rep("ncompare", "N-COMPARE", n, n);
  rep.params = {{"P", P}, {"mass_tol", mass_tol}, {"profile_tol", profile_tol}};
  using boost::math::quadrature::gauss_kronrod;
  const double tau = -std::log1p(-2.0 * P);
  const double atom = tau * std::exp(-tau) / (2.0 * P);
  auto density = [P](double T) { return T * std::exp(-T) / (2.0 * P); };
  if (atom < 0.0) rep.fail("negative atom");
  double min_density = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 1000; ++i) min_density = std::min(min_density, density(tau * i / 1000.0));
  if (min_density < 0.0) rep.fail("negative density");
  const double mass = atom + gauss_kronrod<double, 61>::integrate(density, 0.0, tau, 15, 1e-15);
  if (std::abs(mass - 1.0) > mass_tol) rep.fail("total mass " + std::to_string(mass));
  const RadialOperator target = senate_noise_P(n, P);
  const RadialOperator at_tau = senate_noise_T(n, tau);
  double worst = 0.0;
  for (int x = 0; x <= n; ++x) {
    auto integrand = [&](double T) {
      const double lam = (x == 0 || T == 0.0) ? 1.0 : -std::expm1(-T * x) / (T * x);
      return density(T) * lam;
    };
    const double value = atom * at_tau.profile[x] + gauss_kronrod<double, 61>::integrate(integrand, 0.0, tau, 15, 1e-15);
    worst = std::max(worst, std::abs(value - target.profile[x]));
  }
  if (worst > profile_tol) rep.fail("profile mismatch " + std::to_string(worst));
  rep.observe(worst, {{"n", n}, {"P", P}});
  rep.constants = {{"tau", tau}, {"atom", atom}, {"mass", mass}, {"min_density", min_density},
                   {"profile_residual", worst}};
  return rep;
}

// ---------------------------------------------------------------------------
// Binomial lower bound Sen(S)_K <= 3 e^20 Sen(N~)_{P_K}

inline constexpr double kBinomConstant = 3.0 * 485165195.40979027796910683054154;  // 3 e^20

/// B(n, q, k) = C(n,k) q^k (1-q)^{n-k}.
inline double binomial_probability(int n, double q, int k) { return binomial_pmf(n, q, k); }

/// max_k (1/(K+1)) / a_k: the smallest constant C with Sen(S)_K <= C Sen(N~)_{P_K}.
inline double binom_empirical_constant(int n, int K) {
  const auto a = senate_noise_coeff(n, K);
  double c = 0.0;
  for (double ak : a) c = std::max(c, 1.0 / ((K + 1) * ak));
  return c;
}

/// Weight comparison and its supporting bounds for one (n, K).
inline CheckReport binom_lb_check(int n, int K) {
  if (n < 9) throw DomainError("binom_lb_check: n must be >= 9");
  if (K < 0 || 2 * K > n) throw DomainError("binom_lb_check: K must lie in [0, n/2]");
  CheckReport rep("binom_lb", "BINOM-LB", n, n);
  rep.params = {{"K", K}};
  const HighPrecision P = window_parameter_hp(n, K);
  const auto a_hp = averaged_binomial_weights_hp(n, P);
  const double e2 = std::exp(2.0);
  double worst_margin = std::numeric_limits<double>::infinity();
  double empirical = 0.0;
  for (int k = 0; k <= K; ++k) {
    const HighPrecision lhs = kBinomConstant * a_hp[k] * (K + 1);
    const double margin = lhs.convert_to<double>();
    worst_margin = std::min(worst_margin, margin);
    empirical = std::max(empirical, (1 / (a_hp[k] * (K + 1))).convert_to<double>());
    if (lhs < 1) rep.fail("3e^20 a_k (K+1) < 1 at k=" + std::to_string(k));
    const double ak = a_hp[k].convert_to<double>();
    if (k == 0) {
      if (K == 0 && a_hp[0] != 1) rep.fail("K=0: S_0 weight differs from 1");
      if (K >= 1 && ak < 1.0 / (8.0 * K)) rep.fail("a_0 < 1/(8K)");
      continue;
    }
    const double sk = std::sqrt(static_cast<double>(k));
    const double peak = binomial_probability(n, static_cast<double>(k) / n, k);
    if (k + sk <= n / 2.0) {
      if (peak < 1.0 / (3.0 * sk)) rep.fail("B(n,k/n,k) < 1/(3 sqrt k) at k=" + std::to_string(k));
      for (int i = 0; i <= 8; ++i) {
        const double p = (k + sk * i / 8.0) / n;
        if (std::log(binomial_probability(n, p, k) / peak) < -2.0 - 1e-12)
          rep.fail("window ratio below e^-2 at k=" + std::to_string(k));
      }
      if (ak < 1.0 / (12.0 * e2 * K)) rep.fail("a_k < 1/(12 e^2 K) at k=" + std::to_string(k));
    } else if (ak < 1.0 / (kBinomConstant * K)) {
      rep.fail("a_k < 1/(3 e^20 K) at k=" + std::to_string(k));
    }
    // d/dq ln B(n,q,k) = (k - nq)/(q(1-q)), by a central difference in 50 digits.
    for (double q : {0.1, 0.3, 0.5, static_cast<double>(k) / n}) {
      if (q <= 0.0 || q >= 1.0) continue;
      const HighPrecision hq(q);
      const HighPrecision step("1e-20");
      auto log_b = [&](const HighPrecision& v) { return k * log(v) + (n - k) * log(1 - v); };
      const HighPrecision fd = (log_b(hq + step) - log_b(hq - step)) / (2 * step);
      const HighPrecision exact = (k - n * hq) / (hq * (1 - hq));
      const double err = abs(fd - exact).convert_to<double>() / std::max(1.0, abs(exact).convert_to<double>());
      if (err > 1e-12) rep.fail("log-derivative mismatch at k=" + std::to_string(k));
    }
  }
  rep.observe(1.0 - worst_margin, {{"n", n}, {"K", K}});
  rep.constants = {{"P_K", P.convert_to<double>()}, {"empirical_binom", empirical}, {"min_margin", worst_margin}};
  return rep;
}

/// binom_lb_check over all n in [n_lo, n_hi] and all K <= n/2.
inline CheckReport binom_lb_sweep(int n_lo, int n_hi) {
  CheckReport rep("binom_lb", "BINOM-LB", n_lo, n_hi);
  double empirical = 0.0;
  for (int n = std::max(n_lo, 9); n <= n_hi; ++n) {
    for (int K = 0; 2 * K <= n; ++K) {
      const CheckReport one = binom_lb_check(n, K);
      rep.absorb(one);
      empirical = std::max(empirical, one.constants["empirical_binom"].get<double>());
    }
  }
  rep.constants = {{"empirical_binom", empirical}, {"binom_constant", kBinomConstant}};
  return rep;
}

// ---------------------------------------------------------------------------
// Senate domination chain on one function

/// For nonnegative f:
///   M_Sen(S_bar) f <= C M_Sen(N~)@P_K f <= C M_Sen(N) f  pointwise,
/// with C = 3e^20 and Sen(N) sampled on `grid`. The ratios
/// max_x M_Sen(S_bar) f / M_Sen(N~) f and max_x M_Sen(N~) f / M_Sen(N) f are reported.
inline CheckReport senate_domination_check(const CubeFunction& f, const GridSpec& grid, double slack = 1e-10,
                                           const ExecOptions& opts = {}) {
  const int n = f.dim();
  CheckReport rep("senate_domination", "SENATE-CHAIN", n, n);
  rep.params = {{"grid", grid.to_json()}, {"slack", slack}};
  const KrawtchoukTable t(n);
  const auto sen_s = maximal_apply(senate_family(spherical_family(t, n / 2)), f, opts).values;
  const auto sen_nt = maximal_apply(senate_noise_window_family(n), f, opts).values;
  const auto sen_n = maximal_apply(senate_noise_T_family(n, grid), f, opts).values;
  const double scale = std::max(lp_norm(f, std::numeric_limits<double>::infinity()), 1e-300);
  double r1 = 0.0;
  double r2 = 0.0;
  for (Vertex x = 0; x < f.size(); ++x) {
    if (sen_s[x] > kBinomConstant * sen_nt[x] + slack * scale) rep.fail("Sen(S_bar) step at x=" + std::to_string(x));
    if (sen_nt[x] > sen_n[x] + slack * scale) rep.fail("Sen(N) step at x=" + std::to_string(x));
    if (sen_nt[x] > 0.0) r1 = std::max(r1, sen_s[x] / sen_nt[x]);
    if (sen_n[x] > 0.0) r2 = std::max(r2, sen_nt[x] / sen_n[x]);
  }
  rep.observe(r2 - 1.0, {{"n", n}});
  rep.constants = {{"ratio_sen_s_over_sen_ntilde", r1}, {"ratio_sen_ntilde_over_sen_n", r2}};
  return rep;
}

// ---------------------------------------------------------------------------
// Maximal ergodic inequality for a discrete contraction semigroup

/// A nonnegative operator on R^dim given by a dense row-major matrix or an
/// action callback.
struct ContractionOperator {
  int dim = 0;
  std::function<void(std::span<const double>, std::span<double>)> apply;
  json descriptor = json::object();
};

/// Rejects negative entries or any row or column sum above 1 + tol.
inline ContractionOperator dense_contraction(int dim, std::vector<double> a, json descriptor = json::object(),
                                             double tol = 1e-12) {
  if (dim <= 0 || a.size() != static_cast<std::size_t>(dim) * dim)
    throw DimensionMismatch("dense_contraction: matrix is not dim x dim");
  std::vector<double> col(dim, 0.0);
  for (int i = 0; i < dim; ++i) {
    double row = 0.0;
    for (int j = 0; j < dim; ++j) {
      const double v = a[static_cast<std::size_t>(i) * dim + j];
      if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("dense_contraction: entries must be finite and >= 0");
      row += v;
      col[j] += v;
    }
    if (row > 1.0 + tol) throw DomainError("dense_contraction: row sum exceeds 1");
  }
  for (double c : col)
    if (c > 1.0 + tol) throw DomainError("dense_contraction: column sum exceeds 1");
  descriptor["kind"] = descriptor.value("kind", "dense");
  descriptor["dim"] = dim;
  ContractionOperator op;
  op.dim = dim;
  op.descriptor = std::move(descriptor);
  op.apply = [dim, m = std::move(a)](std::span<const double> in, std::span<double> out) {
    for (int i = 0; i < dim; ++i) {
      double acc = 0.0;
      const double* r = m.data() + static_cast<std::size_t>(i) * dim;
      for (int j = 0; j < dim; ++j) acc += r[j] * in[j];
      out[i] = acc;
    }
  };
  return op;
}

/// (A f)(x) = f(x)/2 + (1/2n) sum_i f(x xor e_i) on {0,1}^n.
inline ContractionOperator lazy_walk(int n) {
  if (n < 1 || n > 20) throw CapacityError("lazy_walk: n must lie in [1, 20]");
  ContractionOperator op;
  op.dim = static_cast<int>(cube_size(n));
  op.descriptor = {{"kind", "lazy_walk"}, {"n", n}};
  op.apply = [n](std::span<const double> in, std::span<double> out) {
    for (std::size_t x = 0; x < in.size(); ++x) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i) acc += in[x ^ (std::size_t{1} << i)];
      out[x] = 0.5 * in[x] + acc / (2.0 * n);
    }
  };
  return op;
}

/// Positive random matrix, Sinkhorn-balanced, then shrunk globally by a factor in [1/2, 1].
inline std::vector<double> random_doubly_substochastic(int dim, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> a(static_cast<std::size_t>(dim) * dim);
  const double density = 0.1 + 0.9 * u(rng);
  const int power = 1 + static_cast<int>(rng() % 3);
  for (double& v : a) v = u(rng) < density ? std::pow(u(rng), power) + 1e-12 : 1e-12;
  for (int it = 0; it < 200; ++it) {
    for (int i = 0; i < dim; ++i) {
      double s = 0.0;
      for (int j = 0; j < dim; ++j) s += a[static_cast<std::size_t>(i) * dim + j];
      for (int j = 0; j < dim; ++j) a[static_cast<std::size_t>(i) * dim + j] /= s;
    }
    for (int j = 0; j < dim; ++j) {
      double s = 0.0;
      for (int i = 0; i < dim; ++i) s += a[static_cast<std::size_t>(i) * dim + j];
      for (int i = 0; i < dim; ++i) a[static_cast<std::size_t>(i) * dim + j] /= s;
    }
  }
  double top = 0.0;
  std::vector<double> col(dim, 0.0);
  for (int i = 0; i < dim; ++i) {
    double s = 0.0;
    for (int j = 0; j < dim; ++j) {
      s += a[static_cast<std::size_t>(i) * dim + j];
      col[j] += a[static_cast<std::size_t>(i) * dim + j];
    }
    top = std::max(top, s);
  }
  for (double c : col) top = std::max(top, c);
  const double shrink = (0.5 + 0.5 * u(rng)) * (1.0 - 1e-12) / top;
  for (double& v : a) v *= shrink;
  return a;
}

/// sup_lambda lambda #{M_{Sen(A), <=T} f >= lambda} / ||f||_1 for every T <= T_max,
/// where Sen(A)_T = (1/(T+1)) sum_{t<=T} A^t. Passes when all are <= 1 + tol.
inline CheckReport ergodic_check(const ContractionOperator& A, std::span<const double> f, int T_max,
                                 double tol = 1e-9) {
  if (static_cast<int>(f.size()) != A.dim) throw DimensionMismatch("ergodic_check: f has the wrong length");
  if (T_max < 0) throw DomainError("ergodic_check: T_max must be >= 0");
  CheckReport rep("ergodic", "ERGODIC-W11", 0, 0);
  rep.params = {{"operator", A.descriptor}, {"T_max", T_max}, {"tol", tol}};
  const double l1 = lp_norm(f, 1.0);
  if (l1 == 0.0) {
    rep.constants = {{"worst_ratio", 0.0}};
    return rep;
  }
  std::vector<double> power(f.begin(), f.end());
  std::vector<double> next(f.size());
  std::vector<double> sum(f.size(), 0.0);
  std::vector<double> best(f.size(), -std::numeric_limits<double>::infinity());
  std::vector<double> avg(f.size());
  double worst = 0.0;
  int worst_T = 0;
  for (int T = 0; T <= T_max; ++T) {
    for (std::size_t i = 0; i < f.size(); ++i) {
      sum[i] += power[i];
      best[i] = std::max(best[i], sum[i] / (T + 1));
    }
    const double r = weak_ratio(best, l1);
    if (r > worst) {
      worst = r;
      worst_T = T;
    }
    A.apply(power, next);
    std::swap(power, next);
  }
  if (worst > 1.0 + tol) rep.fail("weak ratio " + std::to_string(worst) + " at T=" + std::to_string(worst_T));
  rep.observe(worst - 1.0, {{"T", worst_T}});
  rep.constants = {{"worst_ratio", worst}};
  return rep;
}

/// Randomized suite: `trials` Sinkhorn matrices of dimension <= max_dim with
/// random signed f, trial i seeded by splitmix64(seed + i).
inline CheckReport ergodic_suite(int trials, std::uint64_t seed, int max_dim = 64, int T_max = 64,
                                 unsigned threads = 1) {
  CheckReport rep("ergodic", "ERGODIC-W11", 0, 0);
  rep.params = {{"trials", trials}, {"seed", seed}, {"max_dim", max_dim}, {"T_max", T_max},
                {"generator", "sinkhorn+shrink"}};
  std::vector<CheckReport> outcomes(trials);
  detail::parallel_for(static_cast<std::size_t>(trials), threads, [&](std::size_t i) {
    std::mt19937_64 rng(detail::splitmix64(seed + i));
    const int dim = 1 + static_cast<int>(rng() % max_dim);
    auto A = dense_contraction(dim, random_doubly_substochastic(dim, rng), {{"trial", i}});
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> f(dim);
    for (double& v : f) v = g(rng);
    if (i % 4 == 0) {
      std::fill(f.begin(), f.end(), 0.0);
      f[rng() % dim] = 1.0;
    }
    outcomes[i] = ergodic_check(A, f, T_max);
  });
  double worst = 0.0;
  for (const auto& o : outcomes) {
    rep.absorb(o);
    worst = std::max(worst, o.constants["worst_ratio"].get<double>());
  }
  rep.constants = {{"worst_ratio", worst}};
  return rep;
}

// ---------------------------------------------------------------------------
// Explicit bound on ||M_S||_{2->2}

struct ChainBound {
  int n = 0;
  double c_cert = 0.0;
  double C_R = 0.0;
  double binom_constant = kBinomConstant;
  double ergodic_constant = 2.0 * std::numbers::sqrt2;
  double truncation_factor = std::numbers::sqrt2;
  double doubling_factor = 2.0;
  double total = 0.0;
  double empirical_binom_constant = 0.0;
  double empirical_total = 0.0;
  bool small_n_fallback = false;

  json to_json() const {
    return {{"n", n},
            {"c_cert", c_cert},
            {"C_R", C_R},
            {"binom_constant", binom_constant},
            {"ergodic_constant", ergodic_constant},
            {"truncation_factor", truncation_factor},
            {"doubling_factor", doubling_factor},
            {"total", total},
            {"empirical_binom_constant", empirical_binom_constant},
            {"empirical_total", empirical_total},
            {"empirical_is_certified", false},
            {"small_n_fallback", small_n_fallback}};
  }
};

/// total = sqrt2 (C_R + 3e^20 * 2 sqrt2) for n >= 9, and n + 1 below that.
/// The empirical chain swaps 3e^20 for the measured max_K binomial constant.
inline ChainBound chain_bound(int n, double c_cert) {
  if (n < 1) throw DomainError("chain_bound: n must be >= 1");
  ChainBound b;
  b.n = n;
  b.c_cert = c_cert;
  b.C_R = stein_sums(n).C_R;
  for (int K = 0; 2 * K <= n; ++K)
    b.empirical_binom_constant = std::max(b.empirical_binom_constant, binom_empirical_constant(n, K));
  b.empirical_total = b.truncation_factor * (b.C_R + b.empirical_binom_constant * b.ergodic_constant);
  if (n < 9) {
    b.small_n_fallback = true;
    b.total = n + 1.0;
  } else {
    b.total = b.truncation_factor * (b.C_R + b.binom_constant * b.ergodic_constant);
  }
  return b;
}

/// ||M_S f||_2 <= total ||f||_2 on random nonnegative f (plus a point mass and a constant).
inline CheckReport chain_empirical_check(const ChainBound& b, int trials, std::uint64_t seed,
                                         const ExecOptions& opts = {}) {
  const int n = b.n;
  check_capacity(n, opts);
  CheckReport rep("chain_bound", "CHAIN-BOUND", n, n);
  rep.params = {{"trials", trials}, {"seed", seed}};
  const auto fam = spherical_family(KrawtchoukTable(n), n);
  double worst = 0.0;
  for (int i = 0; i < trials + 2; ++i) {
    CubeFunction f = i == 0 ? CubeFunction::delta(n, 0)
                   : i == 1 ? CubeFunction::constant(n, 1.0)
                            : detail::ascent_start(n, 2 + i, seed);
    worst = std::max(worst, maximal_ratio2(fam, f, opts));
  }
  if (worst > b.total) rep.fail("observed ratio exceeds the chain bound");
  rep.observe(worst - b.total, {{"n", n}});
  rep.constants = {{"observed_ratio", worst}, {"total", b.total}, {"empirical_total", b.empirical_total}};
  return rep;
}

}  // namespace hcube
