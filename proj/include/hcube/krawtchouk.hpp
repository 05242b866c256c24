#pragma once

// Binary Krawtchouk polynomials. kappa_k(x) is the eigenvalue of the spherical
// mean S_k on Fourier level x:
//
//   kappa_k(x) = sum_j (-1)^j C(x,j) C(n-x,k-j) / C(n,k).
//
// The table keeps the un-normalized integers K_k(x) = C(n,k) kappa_k(x)
// exactly; everything floating point is derived from them.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "hcube/error.hpp"
#include "hcube/report.hpp"

namespace hcube {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline constexpr int kMaxKrawtchoukDimension = 128;

inline double to_double(const BigInt& v) { return v.convert_to<double>(); }
inline double to_double(const Rational& v) {
  return to_double(numerator(v)) / to_double(denominator(v));
}

inline BigInt big_binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  BigInt r = 1;
  for (int i = 1; i <= k; ++i) {
    r *= n - k + i;
    r /= i;
  }
  return r;
}

class KrawtchoukTable {
 public:
  /// Exact table via (k+1) K_{k+1}(x) = (n-2x) K_k(x) - (n-k+1) K_{k-1}(x).
  explicit KrawtchoukTable(int n) : n_(n) {
    if (n < 0 || n > kMaxKrawtchoukDimension) {
      throw CapacityError("Krawtchouk table dimension " + std::to_string(n) + " outside [0, " +
                          std::to_string(kMaxKrawtchoukDimension) + "]");
    }
    const int w = n + 1;
    K_.assign(static_cast<std::size_t>(w) * w, BigInt(0));
    binom_.resize(w);
    for (int k = 0; k <= n; ++k) binom_[k] = big_binomial(n, k);
    for (int x = 0; x <= n; ++x) {
      at(0, x) = 1;
      if (n >= 1) at(1, x) = n - 2 * x;
      for (int k = 1; k < n; ++k) {
        BigInt t = BigInt(n - 2 * x) * at(k, x) - BigInt(n - k + 1) * at(k - 1, x);
        at(k + 1, x) = t / (k + 1);
      }
    }
    kappa_.resize(K_.size());
    for (int k = 0; k <= n; ++k) {
      const double c = to_double(binom_[k]);
      for (int x = 0; x <= n; ++x) kappa_[idx(k, x)] = to_double(at(k, x)) / c;
    }
  }

  int dim() const { return n_; }

  const BigInt& unnormalized(int k, int x) const { return K_[idx(k, x)]; }
  const BigInt& binom(int k) const { return binom_[k]; }

  Rational exact(int k, int x) const { return Rational(unnormalized(k, x), binom_[k]); }

  double operator()(int k, int x) const { return kappa_[idx(k, x)]; }

  /// kappa_k(0..n) as doubles.
  std::span<const double> row(int k) const {
    return std::span<const double>(kappa_).subspan(idx(k, 0), n_ + 1);
  }

  int sign(int k, int x) const {
    const auto& v = unnormalized(k, x);
    return v > 0 ? 1 : (v < 0 ? -1 : 0);
  }

  /// kappa_k at a real argument, via (n-j) kappa_{j+1} = (n-2x) kappa_j - j kappa_{j-1}.
  double evaluate(int k, double x) const { return evaluate_real(n_, k, x); }

  static double evaluate_real(int n, int k, double x) {
    if (k == 0) return 1.0;
    double prev = 1.0;
    double cur = (n - 2.0 * x) / n;
    for (int j = 1; j < k; ++j) {
      const double next = ((n - 2.0 * x) * cur - j * prev) / (n - j);
      prev = cur;
      cur = next;
    }
    return cur;
  }

 private:
  std::size_t idx(int k, int x) const {
    return static_cast<std::size_t>(k) * (n_ + 1) + static_cast<std::size_t>(x);
  }
  BigInt& at(int k, int x) { return K_[idx(k, x)]; }

  int n_;
  std::vector<BigInt> K_;
  std::vector<BigInt> binom_;
  std::vector<double> kappa_;
};

inline KrawtchoukTable build_table(int n) { return KrawtchoukTable(n); }

/// k-x symmetry kappa_k(x) = kappa_x(k) and reflection kappa_k(n-x) = (-1)^k kappa_k(x),
/// both checked in exact integer arithmetic.
inline CheckReport verify_symmetries(const KrawtchoukTable& t) {
  const int n = t.dim();
  CheckReport r("krawtchouk.symmetries", "KRAWT-SYM", n, n);
  for (int k = 0; k <= n; ++k) {
    for (int x = 0; x <= n; ++x) {
      // K_k(x) / C(n,k) == K_x(k) / C(n,x)
      if (t.unnormalized(k, x) * t.binom(x) != t.unnormalized(x, k) * t.binom(k)) {
        const double gap = std::abs(t(k, x) - t(x, k));
        r.observe(gap, {{"n", n}, {"k", k}, {"x", x}, {"slack", -gap}});
        r.fail("k-x symmetry at k=" + std::to_string(k) + " x=" + std::to_string(x));
      }
      const BigInt reflected = (k % 2 == 0) ? BigInt(t.unnormalized(k, x)) : BigInt(-t.unnormalized(k, x));
      if (t.unnormalized(k, n - x) != reflected) {
        const double gap = std::abs(t(k, n - x) - to_double(reflected) / to_double(t.binom(k)));
        r.observe(gap, {{"n", n}, {"k", k}, {"x", x}, {"slack", -gap}});
        r.fail("reflection at k=" + std::to_string(k) + " x=" + std::to_string(x));
      }
    }
  }
  if (r.worst_case.is_null()) r.worst_case = {{"n", n}, {"k", 0}, {"x", 0}, {"slack", 0.0}};
  return r;
}

/// sum_x kappa_k(x) kappa_l(x) C(n,x) = 2^n / C(n,k) delta_{kl}, exactly.
/// Multiplied through by C(n,k) C(n,l) it reads sum_x K_k K_l C(n,x) = 2^n C(n,k) delta.
inline CheckReport verify_orthogonality(const KrawtchoukTable& t) {
  const int n = t.dim();
  CheckReport r("krawtchouk.orthogonality", "KRAWT-ORTHO", n, n);
  const BigInt two_n = BigInt(1) << n;
  for (int k = 0; k <= n; ++k) {
    for (int l = k; l <= n; ++l) {
      BigInt s = 0;
      for (int x = 0; x <= n; ++x) s += t.unnormalized(k, x) * t.unnormalized(l, x) * t.binom(x);
      const BigInt expect = (k == l) ? BigInt(two_n * t.binom(k)) : BigInt(0);
      if (s != expect) {
        const Rational discrepancy(BigInt(s - expect), BigInt(t.binom(k) * t.binom(l)));
        const double gap = std::abs(to_double(discrepancy));
        r.observe(gap, {{"n", n}, {"k", k}, {"l", l}, {"slack", -gap}});
        r.fail("orthogonality at k=" + std::to_string(k) + " l=" + std::to_string(l));
      }
    }
  }
  if (r.worst_case.is_null()) r.worst_case = {{"n", n}, {"k", 0}, {"l", 0}, {"slack", 0.0}};
  return r;
}

/// All k real roots of kappa_k as a polynomial in x, ascending.
///
/// Integer points use the exact table's sign; between them the real-argument
/// recurrence is sampled on a grid that refines until k roots are bracketed.
inline std::vector<double> roots(const KrawtchoukTable& t, int k) {
  const int n = t.dim();
  if (k < 0 || k > n) throw DomainError("roots: k must lie in [0, n]");
  if (k == 0) return {};
  for (int sub = 4; sub <= 256; sub *= 2) {
    std::vector<double> found;
    int last_sign = 0;
    double last_t = 0.0;
    bool zero_since = false;
    for (int m = 0; m <= n; ++m) {
      for (int j = 0; j < (m == n ? 1 : sub); ++j) {
        const double pt = m + static_cast<double>(j) / sub;
        int s;
        if (j == 0) {
          s = t.sign(k, m);
        } else {
          const double v = t.evaluate(k, pt);
          s = v > 0 ? 1 : (v < 0 ? -1 : 0);
        }
        if (s == 0) {
          found.push_back(pt);
          zero_since = true;
          continue;
        }
        if (last_sign != 0 && s != last_sign && !zero_since) {
          double lo = last_t, hi = pt;
          const double flo = last_sign;
          for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double fm = t.evaluate(k, mid);
            if (fm == 0.0) {
              lo = hi = mid;
              break;
            }
            if ((fm > 0) == (flo > 0)) {
              lo = mid;
            } else {
              hi = mid;
            }
          }
          found.push_back(0.5 * (lo + hi));
        }
        last_sign = s;
        last_t = pt;
        zero_since = false;
      }
    }
    if (static_cast<int>(found.size()) == k) {
      std::sort(found.begin(), found.end());
      return found;
    }
  }
  throw NumericalResolutionError("roots: could not bracket " + std::to_string(k) +
                                 " roots of kappa_k for n=" + std::to_string(n));
}

inline std::vector<double> roots(int n, int k) { return roots(KrawtchoukTable(n), k); }

/// Roots lie in n/2 +- sqrt(k(n-k)) (+ tol) and are pairwise separated by > min_gap.
///
/// The range statement only holds for k <= n/2; for k = n it already fails at
/// n = 2 (roots 1 +- 1/sqrt 2). `half_range_only` restricts the scan to k <= n/2.
inline CheckReport verify_roots(int n_lo, int n_hi, double tol = 1e-9, double min_gap = 1e-8,
                                bool half_range_only = false) {
  CheckReport r("krawtchouk.roots", "KRAWT-ROOTS", n_lo, n_hi);
  r.params = {{"tolerance", tol}, {"min_gap", min_gap}, {"k_range", half_range_only ? "k<=n/2" : "all"}};
  for (int n = n_lo; n <= n_hi; ++n) {
    const KrawtchoukTable t(n);
    for (int k = 1; k <= (half_range_only ? n / 2 : n); ++k) {
      std::vector<double> z;
      try {
        z = roots(t, k);
      } catch (const NumericalResolutionError& e) {
        r.fail(e.what());
        continue;
      }
      const double radius = std::sqrt(static_cast<double>(k) * (n - k));
      for (std::size_t i = 0; i < z.size(); ++i) {
        const double excess = std::abs(z[i] - n / 2.0) - radius;
        r.observe(excess, {{"n", n}, {"k", k}, {"root", z[i]}, {"slack", -excess}});
        if (excess > tol) r.fail("root outside range: n=" + std::to_string(n) + " k=" + std::to_string(k));
        if (i > 0 && z[i] - z[i - 1] <= min_gap) {
          r.fail("roots not distinct: n=" + std::to_string(n) + " k=" + std::to_string(k));
        }
      }
    }
  }
  return r;
}

/// Empirical exponential decay constants for |kappa_k(x)| <= exp(-c k x / n).
struct DecayConstants {
  int n_min = 2;
  int n_max = 2;
  int n0 = 100;
  std::vector<double> c_emp;  // indexed by n; +inf when no nonzero entry exists
  double c2 = std::numeric_limits<double>::infinity();
  json c2_argmin = nullptr;
  double c_cert = std::numeric_limits<double>::infinity();
  json c_cert_argmin = nullptr;
  double worst_bound_ratio = 0.0;  // max |kappa| / exp(-c_cert k x / n)
  json worst_bound_case = nullptr;
  bool bound_holds = true;

  json to_json() const {
    json per_n = json::array();
    for (int n = n_min; n <= n_max; ++n) per_n.push_back({{"n", n}, {"c_emp", json_number(c_emp[n])}});
    return {{"n_range", {n_min, n_max}},
            {"n0", n0},
            {"c_emp", per_n},
            {"c2", json_number(c2)},
            {"c2_argmin", c2_argmin},
            {"c_cert", json_number(c_cert)},
            {"c_cert_argmin", c_cert_argmin},
            {"worst_bound_ratio", worst_bound_ratio},
            {"worst_bound_case", worst_bound_case},
            {"bound_holds", bound_holds}};
  }
};

/// c_emp(n) = min{-(n/kx) ln|kappa_k(x)| : 1 <= k,x <= n/2, kappa != 0} for n <= n_max,
/// c2 = the same minimum restricted to k <= x over n < n0, c_cert = min_n c_emp(n).
inline DecayConstants decay_constants(int n_max, int n0 = 100, double rel_tol = 1e-12) {
  if (n_max < 2) throw DomainError("decay_constants: n_max must be >= 2");
  DecayConstants d;
  d.n_max = n_max;
  d.n0 = n0;
  constexpr double inf = std::numeric_limits<double>::infinity();
  d.c_emp.assign(n_max + 1, inf);
  const int top = std::max(n_max, n0 - 1);
  for (int n = 2; n <= top; ++n) {
    const KrawtchoukTable t(n);
    for (int k = 1; k <= n / 2; ++k) {
      for (int x = 1; x <= n / 2; ++x) {
        if (t.sign(k, x) == 0) continue;
        const double c = -(static_cast<double>(n) / (k * x)) * std::log(std::abs(t(k, x)));
        if (n <= n_max && c < d.c_emp[n]) d.c_emp[n] = c;
        if (n < n0 && k <= x && c < d.c2) {
          d.c2 = c;
          d.c2_argmin = {{"n", n}, {"k", k}, {"x", x}};
        }
      }
    }
    if (n <= n_max && d.c_emp[n] < d.c_cert) {
      d.c_cert = d.c_emp[n];
      d.c_cert_argmin = {{"n", n}};
    }
  }
  for (int n = 2; n <= n_max; ++n) {
    const KrawtchoukTable t(n);
    for (int k = 0; k <= n / 2; ++k) {
      for (int x = 0; x <= n / 2; ++x) {
        const double bound = std::exp(-d.c_cert * k * x / n);
        const double ratio = std::abs(t(k, x)) / bound;
        if (ratio > d.worst_bound_ratio) {
          d.worst_bound_ratio = ratio;
          d.worst_bound_case = {{"n", n}, {"k", k}, {"x", x}};
        }
        if (std::abs(t(k, x)) > bound * (1.0 + rel_tol)) d.bound_holds = false;
      }
    }
  }
  return d;
}

/// Binary entropy in nats.
inline double entropy_nats(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log(p) - (1.0 - p) * std::log1p(-p);
}

/// Numeric facts behind the two cases of the decay bound.
inline CheckReport verify_case_constants(int stirling_n_max = 64) {
  CheckReport r("krawtchouk.case_constants", "KRAWT-CASE", 1, stirling_n_max);
  const double ln2 = std::numbers::ln2;
  const double h = entropy_nats(0.14);
  const double c1 = 2.0 * h - ln2;
  const double y2 = 4.0 * 0.14 * 0.86;
  const double y_ratio = y2 / (1.0 - y2);
  const double n0_rhs = 2.0 * std::log(200.0) / 100.0;
  r.constants = {{"H2_0_14", h},           {"ln2_over_2", ln2 / 2.0}, {"c1", c1},
                 {"y_max_squared", y2},    {"y_ratio", y_ratio},      {"n0", 100},
                 {"n0_requirement", n0_rhs}};
  if (!(h > ln2 / 2.0)) r.fail("H2(0.14) <= ln2/2");
  if (!(y_ratio <= 0.93)) r.fail("y^2/(1-y^2) > 0.93");
  if (!(c1 > 0.116)) r.fail("c1 <= 0.116");
  if (!(c1 >= n0_rhs)) r.fail("n0 = 100 does not satisfy c1 >= 2 ln(2 n0)/n0");

  // C(n, np) >= e^{n H(p)} / sqrt(8 p (1-p) n) >= e^{n H(p)} / sqrt(2n) for integer np.
  double worst = -std::numeric_limits<double>::infinity();
  for (int n = 1; n <= stirling_n_max; ++n) {
    for (int m = 0; m <= n; ++m) {
      const double p = static_cast<double>(m) / n;
      const double log_binom = std::lgamma(n + 1.0) - std::lgamma(m + 1.0) - std::lgamma(n - m + 1.0);
      const double log_weak = n * entropy_nats(p) - 0.5 * std::log(2.0 * n);
      double gap = log_weak - log_binom;  // must be <= 0
      if (m > 0 && m < n) {
        const double log_strong = n * entropy_nats(p) - 0.5 * std::log(8.0 * p * (1 - p) * n);
        if (log_strong < log_weak - 1e-12) r.fail("sqrt(8pqn) form weaker than sqrt(2n) form");
        gap = std::max(gap, log_strong - log_binom);
      }
      if (gap > worst) {
        worst = gap;
        r.worst_case = {{"n", n}, {"m", m}, {"slack", -gap}};
      }
      if (gap > 1e-12) r.fail("Stirling lower bound fails at n=" + std::to_string(n) + " m=" + std::to_string(m));
    }
  }
  r.worst_violation = worst;
  return r;
}

}  // namespace hcube
