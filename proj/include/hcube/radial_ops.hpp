#pragma once

// Radial operators: mixtures sum_k w_k S_k of spherical means. Every such
// operator is diagonal in the character basis with an eigenvalue depending
// only on the level |y|, so it is carried both as sphere weights w[0..n] and
// as a spectral profile lambda[0..n].

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "hcube/cube_core.hpp"
#include "hcube/krawtchouk.hpp"
#include "hcube/report.hpp"

namespace hcube {

using HighPrecision = boost::multiprecision::cpp_bin_float_50;

enum class Route { spectral, direct };

struct RadialOperator {
  int n = 0;
  std::optional<std::vector<double>> weights;
  std::vector<double> profile;
  json tag = json::object();
  bool stochastic = false;

  bool has_weights() const { return weights.has_value(); }
};

enum class IndexKind { discrete, continuous };

/// Sampling grid for a continuously indexed family.
struct GridSpec {
  std::string spacing = "geometric";
  double lo = 0.0;
  double hi = 0.0;
  int points = 0;

  std::vector<double> values() const {
    std::vector<double> v(points);
    if (points == 1) {
      v[0] = lo;
      return v;
    }
    for (int i = 0; i < points; ++i) {
      const double u = static_cast<double>(i) / (points - 1);
      v[i] = (spacing == "geometric") ? lo * std::pow(hi / lo, u) : lo + (hi - lo) * u;
    }
    v.back() = hi;
    return v;
  }

  json to_json() const { return {{"spacing", spacing}, {"lo", lo}, {"hi", hi}, {"points", points}}; }
};

inline constexpr int kDefaultGridPoints = 64;

inline GridSpec default_t_grid(int n, int points = kDefaultGridPoints) {
  const double m = std::max(n, 1);
  return {"geometric", 1.0 / (m * m), 10.0 * m, points};
}

inline GridSpec default_p_grid(int n, int points = kDefaultGridPoints) {
  const double m = std::max(n, 2);
  return {"geometric", 1.0 / (m * m), 0.5, points};
}

struct OperatorFamily {
  int n = 0;
  std::string name;
  IndexKind index_kind = IndexKind::discrete;
  std::vector<double> index;
  std::optional<GridSpec> grid;
  std::vector<RadialOperator> members;

  std::size_t size() const { return members.size(); }
  bool empty() const { return members.empty(); }

  json descriptor() const {
    json j{{"family", name}, {"n", n}, {"members", members.size()},
           {"index_kind", index_kind == IndexKind::discrete ? "discrete" : "continuous"}};
    if (grid) j["grid"] = grid->to_json();
    return j;
  }
};

// ---------------------------------------------------------------------------
// Representation conversion

/// lambda[x] = sum_k w_k kappa_k(x).
inline std::vector<double> profile_from_weights(const KrawtchoukTable& t, std::span<const double> w) {
  const int n = t.dim();
  std::vector<double> lambda(n + 1, 0.0);
  for (int x = 0; x <= n; ++x) {
    double s = 0.0;
    for (int k = 0; k <= n; ++k)
      if (w[k] != 0.0) s += w[k] * t(k, x);
    lambda[x] = s;
  }
  return lambda;
}

/// Inverse Krawtchouk expansion: w_k = C(n,k)/2^n sum_x lambda[x] kappa_k(x) C(n,x).
inline std::vector<double> weights_from_profile(const KrawtchoukTable& t, std::span<const double> lambda) {
  const int n = t.dim();
  std::vector<double> w(n + 1);
  const double scale = std::ldexp(1.0, -n);
  for (int k = 0; k <= n; ++k) {
    double s = 0.0;
    for (int x = 0; x <= n; ++x) s += lambda[x] * t(k, x) * binomial(n, x);
    w[k] = s * binomial(n, k) * scale;
  }
  return w;
}

/// Returns op with sphere weights filled in (derived from its profile if absent).
inline RadialOperator with_weights(RadialOperator op, const KrawtchoukTable& t) {
  if (!op.weights) op.weights = weights_from_profile(t, op.profile);
  return op;
}

// ---------------------------------------------------------------------------
// Binomial weights

inline double binomial_pmf(int n, double p, int k) {
  if (k < 0 || k > n) return 0.0;
  if (p == 0.0) return k == 0 ? 1.0 : 0.0;
  if (p == 1.0) return k == n ? 1.0 : 0.0;
  const double log_c = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
  return std::exp(log_c + k * std::log(p) + (n - k) * std::log1p(-p));
}

inline std::vector<double> binomial_weights(int n, double p) {
  std::vector<double> w(n + 1);
  for (int k = 0; k <= n; ++k) w[k] = binomial_pmf(n, p, k);
  return w;
}

/// Upper tails Pr[Binomial(N, P) >= m] for m = 0..N+1, in 50-digit arithmetic.
inline std::vector<HighPrecision> binomial_upper_tails(int N, const HighPrecision& P) {
  std::vector<HighPrecision> pmf(N + 1);
  if (P == 0) {
    pmf[0] = 1;
  } else if (P == 1) {
    pmf[N] = 1;
  } else {
    const HighPrecision q = 1 - P;
    pmf[0] = pow(q, N);
    const HighPrecision odds = P / q;
    for (int j = 0; j < N; ++j) pmf[j + 1] = pmf[j] * (N - j) / (j + 1) * odds;
  }
  std::vector<HighPrecision> tail(N + 2);
  tail[N + 1] = 0;
  for (int m = N; m >= 0; --m) tail[m] = tail[m + 1] + pmf[m];
  return tail;
}

/// w_k of Sen(N~)_P: (1/P) int_0^P C(n,k) p^k (1-p)^{n-k} dp
///   = Pr[Binomial(n+1, P) >= k+1] / (P (n+1)).
inline std::vector<HighPrecision> averaged_binomial_weights_hp(int n, const HighPrecision& P) {
  std::vector<HighPrecision> a(n + 1);
  if (P == 0) {
    a[0] = 1;
    return a;
  }
  const auto tail = binomial_upper_tails(n + 1, P);
  for (int k = 0; k <= n; ++k) a[k] = tail[k + 1] / (P * (n + 1));
  return a;
}

/// P_K = min((K + sqrt K)/n, 1/2).
inline HighPrecision window_parameter_hp(int n, int K) {
  const HighPrecision v = (HighPrecision(K) + sqrt(HighPrecision(K))) / n;
  return v < HighPrecision(0.5) ? v : HighPrecision(0.5);
}

inline double window_parameter(int n, int K) { return window_parameter_hp(n, K).convert_to<double>(); }

/// a_k, k = 0..K: the S_k weight of Sen(N~)_{P_K}.
inline std::vector<double> senate_noise_coeff(int n, int K) {
  if (n < 1) throw DomainError("senate_noise_coeff: n must be positive");
  if (K < 0 || 2 * K > n) throw DomainError("senate_noise_coeff: K must lie in [0, n/2]");
  const auto a = averaged_binomial_weights_hp(n, window_parameter_hp(n, K));
  std::vector<double> out(K + 1);
  for (int k = 0; k <= K; ++k) out[k] = a[k].convert_to<double>();
  return out;
}

// ---------------------------------------------------------------------------
// Constructors

inline RadialOperator identity_operator(int n) {
  RadialOperator op;
  op.n = n;
  op.weights = std::vector<double>(n + 1, 0.0);
  (*op.weights)[0] = 1.0;
  op.profile.assign(n + 1, 1.0);
  op.tag = {{"kind", "identity"}};
  op.stochastic = true;
  return op;
}

inline RadialOperator spherical(const KrawtchoukTable& t, int k) {
  const int n = t.dim();
  if (k < 0 || k > n) throw DomainError("spherical: k must lie in [0, n]");
  RadialOperator op;
  op.n = n;
  op.weights = std::vector<double>(n + 1, 0.0);
  (*op.weights)[k] = 1.0;
  for (int x = 0; x <= n; ++x) op.profile.push_back(t(k, x));
  op.tag = {{"kind", "spherical"}, {"k", k}};
  op.stochastic = true;
  return op;
}

inline RadialOperator spherical(int n, int k) { return spherical(KrawtchoukTable(n), k); }

/// iota = S_n, the bit-flip-all involution.
inline RadialOperator antipodal(const KrawtchoukTable& t) {
  RadialOperator op = spherical(t, t.dim());
  op.tag = {{"kind", "antipodal"}};
  return op;
}

inline RadialOperator noise_p(int n, double p) {
  if (!(p >= 0.0 && p <= 0.5)) throw DomainError("noise_p: p must lie in [0, 1/2]");
  RadialOperator op;
  op.n = n;
  op.weights = binomial_weights(n, p);
  op.profile.resize(n + 1);
  for (int x = 0; x <= n; ++x) op.profile[x] = std::pow(1.0 - 2.0 * p, x);
  op.tag = {{"kind", "noise_p"}, {"p", p}};
  op.stochastic = true;
  return op;
}

/// N_t with flip probability p = (1 - e^{-t})/2 and eigenvalue e^{-t x}.
inline RadialOperator noise_t(int n, double t) {
  if (!(t >= 0.0)) throw DomainError("noise_t: t must be >= 0");
  const double p = std::isinf(t) ? 0.5 : -0.5 * std::expm1(-t);
  RadialOperator op;
  op.n = n;
  op.weights = binomial_weights(n, p);
  op.profile.resize(n + 1);
  for (int x = 0; x <= n; ++x) op.profile[x] = x == 0 ? 1.0 : std::exp(-t * x);
  op.tag = {{"kind", "noise_t"}, {"t", json_number(t)}};
  op.stochastic = true;
  return op;
}

/// Sen(N)_T = (1/T) int_0^T N_t dt; lambda[x] = (1 - e^{-T x})/(T x). T = 0 is the identity.
inline RadialOperator senate_noise_T(int n, double T) {
  if (!(T >= 0.0) || std::isinf(T)) throw DomainError("senate_noise_T: T must be finite and >= 0");
  if (T == 0.0) {
    RadialOperator op = identity_operator(n);
    op.tag = {{"kind", "senate_noise_t"}, {"T", 0.0}};
    return op;
  }
  RadialOperator op;
  op.n = n;
  op.profile.resize(n + 1);
  op.profile[0] = 1.0;
  for (int x = 1; x <= n; ++x) op.profile[x] = -std::expm1(-T * x) / (T * x);
  op.tag = {{"kind", "senate_noise_t"}, {"T", T}};
  op.stochastic = true;
  return op;
}

/// Sen(N~)_P = (1/P) int_0^P N~_p dp; lambda[x] = (1 - (1-2P)^{x+1}) / (2P(x+1)).
inline RadialOperator senate_noise_P(int n, double P) {
  if (!(P >= 0.0 && P <= 0.5)) throw DomainError("senate_noise_P: P must lie in [0, 1/2]");
  if (P == 0.0) {
    RadialOperator op = identity_operator(n);
    op.tag = {{"kind", "senate_noise_p"}, {"P", 0.0}};
    return op;
  }
  RadialOperator op;
  op.n = n;
  op.profile.resize(n + 1);
  const double log_base = std::log1p(-2.0 * P);
  for (int x = 0; x <= n; ++x) op.profile[x] = -std::expm1((x + 1) * log_base) / (2.0 * P * (x + 1));
  const auto a = averaged_binomial_weights_hp(n, HighPrecision(P));
  op.weights = std::vector<double>(n + 1);
  for (int k = 0; k <= n; ++k) (*op.weights)[k] = a[k].convert_to<double>();
  op.tag = {{"kind", "senate_noise_p"}, {"P", P}};
  op.stochastic = true;
  return op;
}

/// Sen(T)_k: uniform average of family members 0..k.
inline RadialOperator senate_discrete(const OperatorFamily& family, int k) {
  if (family.index_kind != IndexKind::discrete) throw DomainError("senate_discrete: family must be discrete");
  if (k < 0 || static_cast<std::size_t>(k) >= family.size()) throw DomainError("senate_discrete: k out of range");
  const int n = family.n;
  RadialOperator op;
  op.n = n;
  op.profile.assign(n + 1, 0.0);
  bool all_weights = true;
  bool all_stochastic = true;
  std::vector<double> w(n + 1, 0.0);
  for (int l = 0; l <= k; ++l) {
    const auto& m = family.members[l];
    for (int x = 0; x <= n; ++x) op.profile[x] += m.profile[x];
    if (m.weights) {
      for (int j = 0; j <= n; ++j) w[j] += (*m.weights)[j];
    } else {
      all_weights = false;
    }
    all_stochastic = all_stochastic && m.stochastic;
  }
  const double inv = 1.0 / (k + 1);
  for (double& v : op.profile) v *= inv;
  if (all_weights) {
    for (double& v : w) v *= inv;
    op.weights = std::move(w);
  }
  op.tag = {{"kind", "senate"}, {"of", family.name}, {"k", k}};
  op.stochastic = all_stochastic;
  return op;
}

/// Spectral product; the composition of two radial operators.
inline RadialOperator compose(const RadialOperator& a, const RadialOperator& b) {
  if (a.n != b.n) throw DimensionMismatch("compose: operators on different cubes");
  RadialOperator op;
  op.n = a.n;
  op.profile.resize(a.n + 1);
  for (int x = 0; x <= a.n; ++x) op.profile[x] = a.profile[x] * b.profile[x];
  op.tag = {{"kind", "compose"}, {"lhs", a.tag}, {"rhs", b.tag}};
  op.stochastic = a.stochastic && b.stochastic;
  return op;
}

/// Matrix domination A <= c B for radial operators: w^A_k <= c w^B_k for all k.
inline bool dominates_weights(const RadialOperator& a, const RadialOperator& b, double c, double slack = 0.0) {
  if (!a.weights || !b.weights) throw MissingRepresentation("dominates_weights: sphere weights required");
  for (int k = 0; k <= a.n; ++k)
    if ((*a.weights)[k] > c * (*b.weights)[k] + slack) return false;
  return true;
}

/// Dense 2^n x 2^n matrix, entry (x,y) = w_{d(x,y)} / C(n, d(x,y)). Test-scale only.
inline std::vector<double> dense_matrix(const RadialOperator& op) {
  if (!op.weights) throw MissingRepresentation("dense_matrix: sphere weights required");
  if (op.n > 12) throw CapacityError("dense_matrix: n too large");
  const std::size_t N = cube_size(op.n);
  std::vector<double> m(N * N);
  for (Vertex x = 0; x < N; ++x)
    for (Vertex y = 0; y < N; ++y) {
      const int d = hamming_distance(x, y);
      m[x * N + y] = (*op.weights)[d] / binomial(op.n, d);
    }
  return m;
}

// ---------------------------------------------------------------------------
// Application

inline CubeFunction apply_spectral(const RadialOperator& op, const SpectralCoefficients& fhat,
                                   const ExecOptions& opts = {}) {
  SpectralCoefficients c = fhat;
  for (Vertex y = 0; y < c.size(); ++y) c[y] *= op.profile[level_of(y)];
  return wht(c, opts);
}

inline CubeFunction apply_direct(const RadialOperator& op, const SphereSumMatrix& s) {
  if (!op.weights) throw MissingRepresentation("apply: direct route needs sphere weights");
  const int n = s.dim();
  std::vector<int> support;
  for (int k = 0; k <= n; ++k)
    if ((*op.weights)[k] != 0.0) support.push_back(k);
  std::vector<double> out(s.rows());
  for (Vertex x = 0; x < s.rows(); ++x) {
    double acc = 0.0;
    for (int k : support) acc += (*op.weights)[k] * s(x, k);
    out[x] = acc;
  }
  return CubeFunction(n, std::move(out));
}

inline CubeFunction apply(const RadialOperator& op, const CubeFunction& f, Route route = Route::spectral,
                          const ExecOptions& opts = {}) {
  if (op.n != f.dim()) throw DimensionMismatch("apply: operator and function dimensions differ");
  if (route == Route::direct) {
    if (!op.weights) throw MissingRepresentation("apply: direct route needs sphere weights");
    return apply_direct(op, sphere_means_all(f, opts));
  }
  return apply_spectral(op, wht(f, opts), opts);
}

// ---------------------------------------------------------------------------
// Families

/// {S_k}_{k=0..K}; K = n gives the full spherical family, K = floor(n/2) the truncated one.
inline OperatorFamily spherical_family(const KrawtchoukTable& t, int K) {
  OperatorFamily fam;
  fam.n = t.dim();
  fam.name = (K == t.dim()) ? "S" : "S_bar";
  for (int k = 0; k <= K; ++k) {
    fam.members.push_back(spherical(t, k));
    fam.index.push_back(k);
  }
  return fam;
}

inline OperatorFamily senate_family(const OperatorFamily& base) {
  OperatorFamily fam;
  fam.n = base.n;
  fam.name = "Sen(" + base.name + ")";
  for (std::size_t k = 0; k < base.size(); ++k) {
    fam.members.push_back(senate_discrete(base, static_cast<int>(k)));
    fam.index.push_back(static_cast<double>(k));
  }
  return fam;
}

inline OperatorFamily noise_t_family(int n, const GridSpec& grid) {
  OperatorFamily fam;
  fam.n = n;
  fam.name = "N";
  fam.index_kind = IndexKind::continuous;
  fam.grid = grid;
  for (double t : grid.values()) {
    fam.members.push_back(noise_t(n, t));
    fam.index.push_back(t);
  }
  return fam;
}

/// Sen(N) sampled on the grid, plus the T = 0 member (identity).
inline OperatorFamily senate_noise_T_family(int n, const GridSpec& grid) {
  OperatorFamily fam;
  fam.n = n;
  fam.name = "Sen(N)";
  fam.index_kind = IndexKind::continuous;
  fam.grid = grid;
  fam.members.push_back(senate_noise_T(n, 0.0));
  fam.index.push_back(0.0);
  for (double T : grid.values()) {
    fam.members.push_back(senate_noise_T(n, T));
    fam.index.push_back(T);
  }
  return fam;
}

inline OperatorFamily senate_noise_P_family(int n, std::span<const double> Ps, std::string name = "Sen(N~)") {
  OperatorFamily fam;
  fam.n = n;
  fam.name = std::move(name);
  fam.index_kind = IndexKind::continuous;
  for (double P : Ps) {
    fam.members.push_back(senate_noise_P(n, P));
    fam.index.push_back(P);
  }
  return fam;
}

/// Sen(N~) at the window parameters P_K, K = 0..floor(n/2).
inline OperatorFamily senate_noise_window_family(int n) {
  std::vector<double> Ps;
  for (int K = 0; 2 * K <= n; ++K) Ps.push_back(window_parameter(n, K));
  return senate_noise_P_family(n, Ps, "Sen(N~)@P_K");
}

/// CSV rows "kind,param,k_or_x,weight,lambda" for an operator dump.
inline std::vector<std::string> operator_csv_rows(const RadialOperator& op) {
  std::string kind = op.tag.value("kind", "radial");
  std::string param;
  for (const auto& [key, val] : op.tag.items()) {
    if (key == "kind" || !val.is_number()) continue;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", val.get<double>());
    param = buf;
    break;
  }
  std::vector<std::string> rows;
  for (int i = 0; i <= op.n; ++i) {
    char buf[160];
    char wbuf[40] = "";
    if (op.weights) std::snprintf(wbuf, sizeof wbuf, "%.17g", (*op.weights)[i]);
    std::snprintf(buf, sizeof buf, "%s,%s,%d,%s,%.17g", kind.c_str(), param.c_str(), i, wbuf, op.profile[i]);
    rows.emplace_back(buf);
  }
  return rows;
}

}  // namespace hcube
