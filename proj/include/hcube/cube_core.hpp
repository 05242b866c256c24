#pragma once

// Functions on the Boolean hypercube {0,1}^n: storage, norms, the orthonormal
// Walsh-Hadamard transform and all-radii sphere sums.
//
// Vertex x is the integer whose bit i is coordinate x_i. Norms use counting
// measure (no 2^-n factor).

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "hcube/detail/parallel.hpp"
#include "hcube/error.hpp"

namespace hcube {

using Vertex = std::uint64_t;

inline constexpr std::size_t cube_size(int n) { return std::size_t{1} << n; }

inline int hamming_distance(Vertex a, Vertex b) { return std::popcount(a ^ b); }

inline int level_of(Vertex y) { return std::popcount(y); }

/// Binomial coefficient as a double (exact while n*C(n,k) < 2^53).
inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return std::round(r);
}

inline std::int64_t binomial_i64(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::int64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

/// Fixed-order pairwise reduction; identical result for any caller layout.
inline double pairwise_sum(std::span<const double> v) {
  constexpr std::size_t kLeaf = 16;
  if (v.size() <= kLeaf) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

namespace detail {

inline void require_length(int n, std::size_t len, const char* what) {
  if (n < 0 || n > 30) throw CapacityError(std::string(what) + ": dimension out of range");
  if (len != cube_size(n)) {
    throw DimensionMismatch(std::string(what) + ": expected " + std::to_string(cube_size(n)) +
                            " values, got " + std::to_string(len));
  }
}

inline void require_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw DomainError(std::string(what) + ": non-finite entry");
  }
}

}  // namespace detail

/// A real-valued function on {0,1}^n stored densely by vertex index.
class CubeFunction {
 public:
  CubeFunction() : n_(0), values_(1, 0.0) {}

  explicit CubeFunction(int n) : n_(n), values_() {
    detail::require_length(n, cube_size(n), "CubeFunction");
    values_.assign(cube_size(n), 0.0);
  }

  CubeFunction(int n, std::vector<double> values) : n_(n), values_(std::move(values)) {
    detail::require_length(n_, values_.size(), "CubeFunction");
    detail::require_finite(values_, "CubeFunction");
  }

  static CubeFunction constant(int n, double c) {
    return CubeFunction(n, std::vector<double>(cube_size(n), c));
  }

  static CubeFunction delta(int n, Vertex v) {
    CubeFunction f(n);
    f[v] = 1.0;
    return f;
  }

  int dim() const { return n_; }
  std::size_t size() const { return values_.size(); }

  double operator[](Vertex x) const { return values_[x]; }
  double& operator[](Vertex x) { return values_[x]; }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  std::vector<double> release() && { return std::move(values_); }

  bool nonnegative() const {
    for (double x : values_)
      if (x < 0.0) return false;
    return true;
  }

  friend bool operator==(const CubeFunction&, const CubeFunction&) = default;

 private:
  int n_;
  std::vector<double> values_;
};

/// Coefficients in the orthonormal character basis chi_y(x) = (-1)^{x.y} / sqrt(2^n).
class SpectralCoefficients {
 public:
  SpectralCoefficients(int n, std::vector<double> coeffs) : n_(n), coeffs_(std::move(coeffs)) {
    detail::require_length(n_, coeffs_.size(), "SpectralCoefficients");
  }

  int dim() const { return n_; }
  std::size_t size() const { return coeffs_.size(); }
  double operator[](Vertex y) const { return coeffs_[y]; }
  double& operator[](Vertex y) { return coeffs_[y]; }
  std::span<const double> coeffs() const { return coeffs_; }
  std::span<double> coeffs() { return coeffs_; }
  std::vector<double> release() && { return std::move(coeffs_); }

 private:
  int n_;
  std::vector<double> coeffs_;
};

namespace detail {

// In-place unnormalized butterfly followed by the 2^{-n/2} scale.
inline void fwht_inplace(std::span<double> a, int n, unsigned threads) {
  const std::size_t half = a.size() / 2;
  for (int s = 0; s < n; ++s) {
    const std::size_t h = std::size_t{1} << s;
    parallel_ranges(half, threads, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) {
        const std::size_t j = ((i >> s) << (s + 1)) | (i & (h - 1));
        const double u = a[j];
        const double v = a[j + h];
        a[j] = u + v;
        a[j + h] = u - v;
      }
    });
  }
  double scale = std::ldexp(1.0, -(n / 2));
  if (n % 2 == 1) scale *= std::sqrt(0.5);
  if (scale != 1.0) {
    parallel_ranges(a.size(), threads, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) a[i] *= scale;
    });
  }
}

}  // namespace detail

inline SpectralCoefficients wht(const CubeFunction& f, const ExecOptions& opts = {}) {
  check_capacity(f.dim(), opts);
  std::vector<double> a(f.values().begin(), f.values().end());
  detail::fwht_inplace(a, f.dim(), opts.threads);
  return SpectralCoefficients(f.dim(), std::move(a));
}

/// Inverse transform; the orthonormal WHT is its own inverse.
inline CubeFunction wht(const SpectralCoefficients& c, const ExecOptions& opts = {}) {
  check_capacity(c.dim(), opts);
  std::vector<double> a(c.coeffs().begin(), c.coeffs().end());
  detail::fwht_inplace(a, c.dim(), opts.threads);
  return CubeFunction(c.dim(), std::move(a));
}

/// ||E_x f||_2^2 for every level x = 0..n.
inline std::vector<double> level_energies(const SpectralCoefficients& c) {
  const int n = c.dim();
  std::vector<std::vector<double>> buckets(n + 1);
  for (Vertex y = 0; y < c.size(); ++y) buckets[level_of(y)].push_back(c[y] * c[y]);
  std::vector<double> e(n + 1);
  for (int x = 0; x <= n; ++x) e[x] = pairwise_sum(buckets[x]);
  return e;
}

inline std::vector<double> level_energies(const CubeFunction& f, const ExecOptions& opts = {}) {
  return level_energies(wht(f, opts));
}

/// Counting-measure l_p norm; p = +infinity gives the sup norm.
inline double lp_norm(std::span<const double> v, double p) {
  if (!(p >= 1.0)) throw DomainError("lp_norm: p must be >= 1");
  if (std::isinf(p)) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  }
  std::vector<double> t(v.size());
  if (p == 1.0) {
    for (std::size_t i = 0; i < v.size(); ++i) t[i] = std::abs(v[i]);
    return pairwise_sum(t);
  }
  if (p == 2.0) {
    for (std::size_t i = 0; i < v.size(); ++i) t[i] = v[i] * v[i];
    return std::sqrt(pairwise_sum(t));
  }
  for (std::size_t i = 0; i < v.size(); ++i) t[i] = std::pow(std::abs(v[i]), p);
  return std::pow(pairwise_sum(t), 1.0 / p);
}

inline double lp_norm(const CubeFunction& f, double p) { return lp_norm(f.values(), p); }

/// Un-normalized sphere sums A_k(x) = sum_{d(x,y)=k} f(y), row-major [x][k].
///
/// Uses the distance-regular recurrence
///   (k+1) A_{k+1} = L A_k - (n-k+1) A_{k-1},
/// L the adjacency operator. For integral T every division is exact.
template <class T>
std::vector<T> sphere_sums(int n, std::span<const T> f, const ExecOptions& opts = {}) {
  check_capacity(n, opts);
  detail::require_length(n, f.size(), "sphere_sums");
  const std::size_t N = cube_size(n);
  const std::size_t width = static_cast<std::size_t>(n) + 1;
  std::vector<T> out(N * width);
  std::vector<T> prev(N, T{0});
  std::vector<T> cur(f.begin(), f.end());
  std::vector<T> next(N);
  for (std::size_t x = 0; x < N; ++x) out[x * width] = cur[x];
  for (int k = 0; k < n; ++k) {
    const T back = static_cast<T>(n - k + 1);
    const T denom = static_cast<T>(k + 1);
    detail::parallel_ranges(N, opts.threads, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t x = lo; x < hi; ++x) {
        T acc{0};
        for (int i = 0; i < n; ++i) acc += cur[x ^ (std::size_t{1} << i)];
        if (k > 0) acc -= back * prev[x];
        next[x] = acc / denom;
        out[x * width + k + 1] = next[x];
      }
    });
    std::swap(prev, cur);
    std::swap(cur, next);
  }
  return out;
}

/// Normalized sphere means s[x][k] = pi_x S_k f for every vertex and radius.
class SphereSumMatrix {
 public:
  SphereSumMatrix(int n, std::vector<double> means) : n_(n), data_(std::move(means)) {
    if (data_.size() != cube_size(n) * (static_cast<std::size_t>(n) + 1)) {
      throw DimensionMismatch("SphereSumMatrix: wrong buffer size");
    }
  }

  int dim() const { return n_; }
  std::size_t rows() const { return cube_size(n_); }
  std::size_t width() const { return static_cast<std::size_t>(n_) + 1; }
  double operator()(Vertex x, int k) const { return data_[x * width() + k]; }
  std::span<const double> row(Vertex x) const {
    return std::span<const double>(data_).subspan(x * width(), width());
  }
  std::span<const double> data() const { return data_; }

 private:
  int n_;
  std::vector<double> data_;
};

inline SphereSumMatrix sphere_means_all(const CubeFunction& f, const ExecOptions& opts = {}) {
  const int n = f.dim();
  std::vector<double> s = sphere_sums<double>(n, f.values(), opts);
  std::vector<double> inv(n + 1);
  for (int k = 0; k <= n; ++k) inv[k] = 1.0 / binomial(n, k);
  const std::size_t width = static_cast<std::size_t>(n) + 1;
  detail::parallel_ranges(cube_size(n), opts.threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t x = lo; x < hi; ++x)
      for (std::size_t k = 0; k < width; ++k) s[x * width + k] *= inv[k];
  });
  return SphereSumMatrix(n, std::move(s));
}

}  // namespace hcube
