#pragma once

// Marking games: an adversary marks vertices (or edges) of {0,1}^n and we look
// for a center all of whose spheres contain a small marked fraction.
//
// Edge (y, i) joins y and y + e_i with bit i of y clear. Its index is
// i * 2^{n-1} + (y with bit i squeezed out). The distance from x to an edge
// is the distance to its nearer endpoint.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "hcube/cube_core.hpp"
#include "hcube/detail/parallel.hpp"
#include "hcube/error.hpp"
#include "hcube/maximal.hpp"
#include "hcube/report.hpp"

namespace hcube {

enum class MarkingKind { vertex, edge };

inline const char* to_string(MarkingKind k) { return k == MarkingKind::vertex ? "vertex" : "edge"; }

/// Nonnegative fraction num/den kept in lowest terms.
struct Fraction {
  std::int64_t num = 0;
  std::int64_t den = 1;

  Fraction() = default;
  Fraction(std::int64_t a, std::int64_t b) : num(a), den(b) {
    if (b <= 0) throw DomainError("Fraction: denominator must be positive");
    const std::int64_t g = std::gcd(a, b);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  std::string str() const { return std::to_string(num) + "/" + std::to_string(den); }

  friend bool operator<(const Fraction& a, const Fraction& b) {
    return static_cast<__int128>(a.num) * b.den < static_cast<__int128>(b.num) * a.den;
  }
  friend bool operator>(const Fraction& a, const Fraction& b) { return b < a; }
  friend bool operator==(const Fraction& a, const Fraction& b) { return a.num == b.num && a.den == b.den; }
};

inline std::size_t edge_count(int n) { return n == 0 ? 0 : static_cast<std::size_t>(n) << (n - 1); }

inline std::size_t edge_index(int n, Vertex y, int i) {
  const Vertex low = y & ((Vertex{1} << i) - 1);
  const Vertex high = y >> (i + 1);
  return (static_cast<std::size_t>(i) << (n - 1)) | (low | (high << i));
}

/// Lower endpoint and direction of an edge index.
inline std::pair<Vertex, int> edge_endpoints(int n, std::size_t e) {
  const int i = static_cast<int>(e >> (n - 1));
  const Vertex c = e & ((Vertex{1} << (n - 1)) - 1);
  const Vertex low = c & ((Vertex{1} << i) - 1);
  const Vertex high = c >> i;
  return {low | (high << (i + 1)), i};
}

class MarkingSet {
 public:
  MarkingSet(int n, MarkingKind kind) : n_(n), kind_(kind) {
    if (n < 0 || n > 30) throw CapacityError("MarkingSet: dimension out of range");
    bits_.assign(kind == MarkingKind::vertex ? cube_size(n) : edge_count(n), 0);
  }

  MarkingSet(int n, MarkingKind kind, std::span<const std::size_t> marked) : MarkingSet(n, kind) {
    for (std::size_t i : marked) set(i);
  }

  static MarkingSet vertices_from_mask(int n, std::uint64_t mask) {
    MarkingSet m(n, MarkingKind::vertex);
    for (Vertex v = 0; v < m.size(); ++v)
      if ((mask >> v) & 1u) m.set(v);
    return m;
  }

  int dim() const { return n_; }
  MarkingKind kind() const { return kind_; }
  std::size_t size() const { return bits_.size(); }
  std::size_t count() const { return count_; }

  bool test(std::size_t i) const { return bits_.at(i) != 0; }

  void set(std::size_t i, bool on = true) {
    if (i >= bits_.size()) throw DomainError("MarkingSet: index " + std::to_string(i) + " out of range");
    if (static_cast<bool>(bits_[i]) == on) return;
    bits_[i] = on;
    if (on) ++count_;
    else --count_;
  }

  /// |F| / 2^n, or |F'| / (n 2^{n-1}).
  Fraction epsilon() const {
    if (bits_.empty()) return {0, 1};
    return {static_cast<std::int64_t>(count_), static_cast<std::int64_t>(bits_.size())};
  }

  std::vector<std::size_t> marked() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < bits_.size(); ++i)
      if (bits_[i]) out.push_back(i);
    return out;
  }

  std::vector<std::int64_t> indicator() const {
    if (kind_ != MarkingKind::vertex) throw DomainError("indicator: vertex marking required");
    return {bits_.begin(), bits_.end()};
  }

  json to_json() const { return {{"n", n_}, {"kind", to_string(kind_)}, {"marked", marked()}}; }

  static MarkingSet from_json(const json& j) {
    try {
      const int n = j.at("n").get<int>();
      const std::string kind = j.at("kind").get<std::string>();
      if (kind != "vertex" && kind != "edge") throw FormatError("marking: kind must be vertex or edge");
      const auto marked = j.at("marked").get<std::vector<std::size_t>>();
      return MarkingSet(n, kind == "vertex" ? MarkingKind::vertex : MarkingKind::edge, marked);
    } catch (const json::exception& e) {
      throw FormatError(std::string("marking: ") + e.what());
    }
  }

  friend bool operator==(const MarkingSet&, const MarkingSet&) = default;

 private:
  int n_;
  MarkingKind kind_;
  std::vector<std::uint8_t> bits_;
  std::size_t count_ = 0;
};

inline MarkingSet load_marking(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open marking file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw FormatError("marking file " + path + ": " + e.what());
  }
  return MarkingSet::from_json(j);
}

inline void save_marking(const std::string& path, const MarkingSet& m) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write marking file " + path);
  out << m.to_json().dump() << '\n';
}

struct GameResult {
  Vertex best_center = 0;
  Fraction value;
  std::vector<double> profile;
  Fraction epsilon;

  /// value / sqrt(epsilon); NaN for an empty marking.
  double ratio() const {
    return epsilon.num == 0 ? std::numeric_limits<double>::quiet_NaN() : value.value() / std::sqrt(epsilon.value());
  }

  json to_json() const {
    return {{"best_center", best_center},
            {"value", value.value()},
            {"value_exact", value.str()},
            {"profile", profile},
            {"epsilon", epsilon.str()},
            {"ratio", json_number(ratio())}};
  }
};

// ---------------------------------------------------------------------------
// Vertex markings

/// |F cap sphere_k(x)| / C(n,k) for k = 0..n.
inline std::vector<double> density_profile(const MarkingSet& F, Vertex x) {
  if (F.kind() != MarkingKind::vertex) throw DomainError("density_profile: vertex marking required");
  const int n = F.dim();
  if (x >= cube_size(n)) throw DomainError("density_profile: center out of range");
  std::vector<double> p(n + 1, 0.0);
  for (std::size_t y : F.marked()) p[hamming_distance(x, y)] += 1.0;
  for (int k = 0; k <= n; ++k) p[k] /= binomial(n, k);
  return p;
}

namespace detail {

// Per-center maximum fraction over radii, from integer sphere counts [x][k]
// with sphere sizes size[k] (a zero size skips that radius).
inline Fraction row_max(std::span<const std::int64_t> counts, std::span<const std::int64_t> sizes) {
  Fraction best{0, 1};
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (sizes[k] == 0) continue;
    const Fraction f{counts[k], sizes[k]};
    if (f > best) best = f;
  }
  return best;
}

inline GameResult argmin_center(int n, std::span<const std::int64_t> counts, std::span<const std::int64_t> sizes,
                                unsigned threads) {
  const std::size_t w = sizes.size();
  const std::size_t N = cube_size(n);
  std::vector<Fraction> per(N);
  parallel_ranges(N, threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t x = lo; x < hi; ++x) per[x] = row_max(counts.subspan(x * w, w), sizes);
  });
  GameResult r;
  r.value = per[0];
  for (Vertex x = 1; x < N; ++x) {
    if (per[x] < r.value) {
      r.value = per[x];
      r.best_center = x;
    }
  }
  r.profile.resize(w);
  for (std::size_t k = 0; k < w; ++k) {
    r.profile[k] = sizes[k] == 0 ? 0.0
                                 : static_cast<double>(counts[r.best_center * w + k]) / static_cast<double>(sizes[k]);
  }
  return r;
}

// Marked-edge counts by edge distance: row x, column k = 0..n-1.
inline std::vector<std::int64_t> edge_sphere_counts(const MarkingSet& F, unsigned threads) {
  const int n = F.dim();
  const std::size_t N = cube_size(n);
  const std::size_t w = static_cast<std::size_t>(n);
  std::vector<std::int64_t> out(N * w, 0);
  const std::size_t half = N / 2;
  for (int i = 0; i < n; ++i) {
    std::vector<std::int64_t> g(N, 0);
    bool any = false;
    for (std::size_t c = 0; c < half; ++c) {
      if (F.test((static_cast<std::size_t>(i) << (n - 1)) | c)) {
        g[edge_endpoints(n, (static_cast<std::size_t>(i) << (n - 1)) | c).first] = 1;
        any = true;
      }
    }
    if (!any) continue;
    const auto a = sphere_sums<std::int64_t>(n, g, ExecOptions{30, threads});
    const std::size_t wa = w + 1;
    for (std::size_t x = 0; x < N; ++x) {
      const bool up = (x >> i) & 1u;
      for (std::size_t k = 0; k < w; ++k) out[x * w + k] += a[x * wa + k + (up ? 1 : 0)];
    }
  }
  return out;
}

}  // namespace detail

/// Exact min over centers x of max over radii of the marked fraction.
/// Ties go to the smallest center index.
inline GameResult best_center(const MarkingSet& F, const ExecOptions& opts = {}) {
  const int n = F.dim();
  check_capacity(n, opts);
  GameResult r;
  if (F.kind() == MarkingKind::vertex) {
    const auto ind = F.indicator();
    const auto c = sphere_sums<std::int64_t>(n, ind, opts);
    std::vector<std::int64_t> sizes(n + 1);
    for (int k = 0; k <= n; ++k) sizes[k] = binomial_i64(n, k);
    r = detail::argmin_center(n, c, sizes, opts.threads);
  } else {
    if (n == 0) throw DomainError("best_center: the 0-cube has no edges");
    const auto c = detail::edge_sphere_counts(F, opts.threads);
    std::vector<std::int64_t> sizes(n);
    for (int k = 0; k < n; ++k) sizes[k] = binomial_i64(n, k) * (n - k);
    r = detail::argmin_center(n, c, sizes, opts.threads);
  }
  r.epsilon = F.epsilon();
  return r;
}

/// Best center by direct distance enumeration; O(4^n), for cross-checks.
inline GameResult best_center_bruteforce(const MarkingSet& F) {
  const int n = F.dim();
  if (n > 12) throw CapacityError("best_center_bruteforce: n must be <= 12");
  const bool edges = F.kind() == MarkingKind::edge;
  const std::size_t w = edges ? n : n + 1;
  std::vector<std::int64_t> sizes(w);
  for (std::size_t k = 0; k < w; ++k) sizes[k] = binomial_i64(n, k) * (edges ? n - static_cast<int>(k) : 1);
  const auto marked = F.marked();
  std::vector<std::int64_t> counts(cube_size(n) * w, 0);
  for (Vertex x = 0; x < cube_size(n); ++x) {
    for (std::size_t e : marked) {
      int d;
      if (edges) {
        const auto [y, i] = edge_endpoints(n, e);
        d = std::min(hamming_distance(x, y), hamming_distance(x, y | (Vertex{1} << i)));
      } else {
        d = hamming_distance(x, e);
      }
      ++counts[x * w + d];
    }
  }
  GameResult r = detail::argmin_center(n, counts, sizes, 1);
  r.epsilon = F.epsilon();
  return r;
}

// ---------------------------------------------------------------------------
// Edge markings

/// f(y) = (marked edges at y) / n.
inline CubeFunction edge_reduce(const MarkingSet& F) {
  if (F.kind() != MarkingKind::edge) throw DomainError("edge_reduce: edge marking required");
  const int n = F.dim();
  CubeFunction f(n);
  for (std::size_t e : F.marked()) {
    const auto [y, i] = edge_endpoints(n, e);
    f[y] += 1.0;
    f[y | (Vertex{1} << i)] += 1.0;
  }
  for (double& v : f.values()) v /= n;
  return f;
}

/// Checks ||f||_2^2 <= 2|F'|/n and, at every center and edge radius k, the
/// marked fraction <= 2 pi_x S_k f (k <= n/2) or 2 pi_x S_{k+1} f (k > n/2),
/// exactly in integers against direct edge-sphere counts.
inline CheckReport edge_reduction_check(const MarkingSet& F) {
  if (F.kind() != MarkingKind::edge) throw DomainError("edge_reduction_check: edge marking required");
  const int n = F.dim();
  CheckReport rep("game.edge_reduction", "GAME-COROLLARY", n, n);
  const std::size_t N = cube_size(n);
  std::vector<std::int64_t> g(N, 0);  // marked edges incident to y, i.e. n f(y)
  for (std::size_t e : F.marked()) {
    const auto [y, i] = edge_endpoints(n, e);
    ++g[y];
    ++g[y | (Vertex{1} << i)];
  }
  std::int64_t sq = 0;
  for (auto v : g) sq += v * v;
  // ||f||^2 = sq / n^2 <= 2|F'|/n.
  if (sq > 2 * static_cast<std::int64_t>(F.count()) * n) rep.fail("||f||_2^2 exceeds 2|F'|/n");
  const auto a = sphere_sums<std::int64_t>(n, g);
  const MarkingSet& marking = F;
  std::vector<std::int64_t> counts(N * n, 0);
  for (Vertex x = 0; x < N; ++x) {
    for (std::size_t e : marking.marked()) {
      const auto [y, i] = edge_endpoints(n, e);
      ++counts[x * n + std::min(hamming_distance(x, y), hamming_distance(x, y | (Vertex{1} << i)))];
    }
  }
  double worst = -std::numeric_limits<double>::infinity();
  const std::size_t wa = static_cast<std::size_t>(n) + 1;
  for (Vertex x = 0; x < N; ++x) {
    for (int k = 0; k < n; ++k) {
      const __int128 cnt = counts[x * n + k];
      const __int128 edges_k = static_cast<__int128>(binomial_i64(n, k)) * (n - k);
      // fraction = cnt / edges_k; bound = 2 A_j(g) / (n C(n,j)).
      const int j = 2 * k <= n ? k : k + 1;
      const __int128 lhs = cnt * n * binomial_i64(n, j);
      const __int128 rhs = 2 * static_cast<__int128>(a[x * wa + j]) * edges_k;
      if (lhs > rhs) rep.fail("edge-sphere bound fails at x=" + std::to_string(x) + " k=" + std::to_string(k));
      const double frac = static_cast<double>(cnt) / static_cast<double>(edges_k);
      const double bound = 2.0 * static_cast<double>(a[x * wa + j]) / (n * binomial(n, j));
      worst = std::max(worst, frac - bound);
    }
  }
  rep.observe(worst, {{"n", n}, {"edges", F.count()}});
  rep.constants = {{"l2_sq_scaled", sq}, {"edges", F.count()}};
  return rep;
}

// ---------------------------------------------------------------------------
// Adversaries

struct AdversaryResult {
  MarkingSet marking;
  Fraction value;
  std::string method;
  std::uint64_t seed = 0;
  std::size_t evaluated = 0;
  std::vector<std::pair<std::size_t, double>> trace;  // (step, best-so-far)
  json params = json::object();

  double ratio() const {
    const Fraction eps = marking.epsilon();
    return eps.num == 0 ? std::numeric_limits<double>::quiet_NaN() : value.value() / std::sqrt(eps.value());
  }

  json to_json() const {
    json tr = json::array();
    for (const auto& [s, v] : trace) tr.push_back({s, v});
    return {{"n", marking.dim()},
            {"m", marking.count()},
            {"epsilon", marking.epsilon().str()},
            {"value", value.value()},
            {"value_exact", value.str()},
            {"ratio", json_number(ratio())},
            {"method", method},
            {"seed", seed},
            {"evaluated", evaluated},
            {"params", params},
            {"marking", marking.to_json()},
            {"trace", tr}};
  }
};

/// Results CSV row "n,m,epsilon,value,ratio,method,seed".
inline std::string result_csv_row(const AdversaryResult& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d,%zu,%.17g,%.17g,%.17g,%s,%llu", r.marking.dim(), r.marking.count(),
                r.marking.epsilon().value(), r.value.value(), r.ratio(), r.method.c_str(),
                static_cast<unsigned long long>(r.seed));
  return buf;
}

inline constexpr const char* kResultCsvHeader = "n,m,epsilon,value,ratio,method,seed";

namespace detail {

inline std::uint64_t translate_mask(std::uint64_t mask, int n, Vertex t) {
  std::uint64_t out = 0;
  for (Vertex v = 0; v < cube_size(n); ++v)
    if ((mask >> v) & 1u) out |= std::uint64_t{1} << (v ^ t);
  return out;
}

inline bool translation_canonical(std::uint64_t mask, int n) {
  for (Vertex t = 1; t < cube_size(n); ++t)
    if (translate_mask(mask, n, t) < mask) return false;
  return true;
}

inline Fraction mask_value(std::uint64_t mask, int n) {
  std::vector<std::int64_t> ind(cube_size(n));
  for (Vertex v = 0; v < ind.size(); ++v) ind[v] = (mask >> v) & 1u;
  const auto c = sphere_sums<std::int64_t>(n, ind);
  std::vector<std::int64_t> sizes(n + 1);
  for (int k = 0; k <= n; ++k) sizes[k] = binomial_i64(n, k);
  return argmin_center(n, c, sizes, 1).value;
}

// Next integer with the same popcount (Gosper's hack).
inline std::uint64_t next_same_popcount(std::uint64_t v) {
  const std::uint64_t t = v | (v - 1);
  return (t + 1) | (((~t & -~t) - 1) >> (std::countr_zero(v) + 1));
}

}  // namespace detail

/// Maximum best-center value over all size-m vertex markings, scanning one
/// representative per translation class. Returns the smallest maximizing mask.
inline AdversaryResult exhaustive_adversary(int n, int m) {
  if (n < 0 || n > 4) throw CapacityError("exhaustive_adversary: n must lie in [0, 4]");
  const int N = static_cast<int>(cube_size(n));
  if (m < 0 || m > N) throw DomainError("exhaustive_adversary: m must lie in [0, 2^n]");
  AdversaryResult best{MarkingSet(n, MarkingKind::vertex), Fraction{0, 1}, "exhaustive", 0, 0, {}, {}};
  best.params = {{"orbit_reduction", "translation"}};
  if (m == 0) {
    best.evaluated = 1;
    return best;
  }
  const std::uint64_t full = N == 64 ? ~0ULL : (std::uint64_t{1} << N) - 1;
  bool first = true;
  for (std::uint64_t mask = (std::uint64_t{1} << m) - 1;; mask = detail::next_same_popcount(mask)) {
    if (mask > full) break;
    if (detail::translation_canonical(mask, n)) {
      const Fraction v = detail::mask_value(mask, n);
      ++best.evaluated;
      if (first || v > best.value) {
        best.value = v;
        best.marking = MarkingSet::vertices_from_mask(n, mask);
        first = false;
      }
    }
    if (mask == full) break;
  }
  return best;
}

/// Same maximum with no orbit reduction and brute-force distance counting.
inline Fraction exhaustive_value_bruteforce(int n, int m) {
  if (n < 0 || n > 4) throw CapacityError("exhaustive_value_bruteforce: n must lie in [0, 4]");
  const std::uint64_t N = cube_size(n);
  Fraction best{0, 1};
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << N); ++mask) {
    if (std::popcount(mask) != m) continue;
    const Fraction v = best_center_bruteforce(MarkingSet::vertices_from_mask(n, mask)).value;
    if (v > best) best = v;
  }
  return best;
}

struct AnnealOptions {
  std::uint64_t seed = 0;
  std::size_t budget = 20000;  // proposed swaps per chain
  int chains = 1;
  double t_start = 0.05;
  double t_end = 1e-4;
  unsigned threads = 1;

  json to_json() const {
    return {{"budget", budget}, {"chains", chains}, {"t_start", t_start}, {"t_end", t_end}, {"cooling", "geometric"},
            {"move", "swap"}};
  }
};

namespace detail {

// Sphere counts of the current marking with per-center maxima, updated per swap.
class AnnealState {
 public:
  AnnealState(int n, std::vector<Vertex> marked) : n_(n), w_(n + 1), marked_(std::move(marked)) {
    const std::size_t N = cube_size(n);
    in_.assign(N, 0);
    for (Vertex v : marked_) in_[v] = 1;
    for (Vertex v = 0; v < N; ++v)
      if (!in_[v]) unmarked_.push_back(v);
    sizes_.resize(w_);
    for (int k = 0; k <= n; ++k) sizes_[k] = binomial_i64(n, k);
    counts_.assign(N * w_, 0);
    for (Vertex x = 0; x < N; ++x)
      for (Vertex v : marked_) ++counts_[x * w_ + hamming_distance(x, v)];
    best_.resize(N);
    for (Vertex x = 0; x < N; ++x) best_[x] = row_max(std::span<const std::int64_t>(counts_).subspan(x * w_, w_), sizes_);
  }

  Fraction value() const { return *std::min_element(best_.begin(), best_.end()); }

  std::size_t marked_count() const { return marked_.size(); }
  std::size_t unmarked_count() const { return unmarked_.size(); }

  /// Swap marked_[i] out and unmarked_[j] in.
  void swap(std::size_t i, std::size_t j) {
    const Vertex out = marked_[i];
    const Vertex in = unmarked_[j];
    for (Vertex x = 0; x < best_.size(); ++x) {
      const int dout = hamming_distance(x, out);
      const int din = hamming_distance(x, in);
      if (dout == din) continue;
      std::int64_t* row = counts_.data() + x * w_;
      const Fraction before_out{row[dout], sizes_[dout]};
      --row[dout];
      ++row[din];
      const Fraction after_in{row[din], sizes_[din]};
      if (after_in > best_[x]) {
        best_[x] = after_in;
      } else if (before_out == best_[x]) {
        best_[x] = row_max(std::span<const std::int64_t>(row, w_), sizes_);
      }
    }
    marked_[i] = in;
    unmarked_[j] = out;
    in_[out] = 0;
    in_[in] = 1;
  }

  MarkingSet marking() const {
    MarkingSet m(n_, MarkingKind::vertex);
    for (Vertex v : marked_) m.set(v);
    return m;
  }

 private:
  int n_;
  std::size_t w_;
  std::vector<Vertex> marked_;
  std::vector<Vertex> unmarked_;
  std::vector<std::uint8_t> in_;
  std::vector<std::int64_t> sizes_;
  std::vector<std::int64_t> counts_;
  std::vector<Fraction> best_;
};

inline AdversaryResult anneal_chain(int n, int m, std::uint64_t chain_seed, const AnnealOptions& ao) {
  std::mt19937_64 rng(chain_seed);
  std::vector<Vertex> all(cube_size(n));
  std::iota(all.begin(), all.end(), Vertex{0});
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(m);
  std::sort(all.begin(), all.end());
  AnnealState state(n, all);
  AdversaryResult res{state.marking(), state.value(), "anneal", ao.seed, 1, {}, ao.to_json()};
  res.trace.emplace_back(0, res.value.value());
  if (state.marked_count() == 0 || state.unmarked_count() == 0 || ao.budget == 0) return res;
  Fraction cur = res.value;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double ratio = ao.budget > 1 ? std::pow(ao.t_end / ao.t_start, 1.0 / (ao.budget - 1)) : 1.0;
  double temp = ao.t_start;
  for (std::size_t step = 1; step <= ao.budget; ++step, temp *= ratio) {
    const std::size_t i = rng() % state.marked_count();
    const std::size_t j = rng() % state.unmarked_count();
    state.swap(i, j);
    const Fraction next = state.value();
    ++res.evaluated;
    const double delta = next.value() - cur.value();
    if (delta >= 0.0 || unif(rng) < std::exp(delta / temp)) {
      cur = next;
      if (cur > res.value) {
        res.value = cur;
        res.marking = state.marking();
        res.trace.emplace_back(step, cur.value());
      }
    } else {
      state.swap(i, j);  // the swapped-in vertex now sits at marked_[i]
    }
  }
  return res;
}

}  // namespace detail

/// Simulated annealing over size-m vertex markings; chain c uses seed
/// splitmix64(seed + c). Deterministic for a fixed seed.
inline AdversaryResult anneal_adversary(int n, int m, const AnnealOptions& ao = {}) {
  if (n < 0 || n > 16) throw CapacityError("anneal_adversary: n must lie in [0, 16]");
  if (m < 0 || static_cast<std::size_t>(m) > cube_size(n)) throw DomainError("anneal_adversary: m must lie in [0, 2^n]");
  if (ao.chains < 1) throw DomainError("anneal_adversary: chains must be >= 1");
  if (!(ao.t_start > 0.0 && ao.t_end > 0.0)) throw DomainError("anneal_adversary: temperatures must be positive");
  std::vector<AdversaryResult> chains(ao.chains, AdversaryResult{MarkingSet(n, MarkingKind::vertex)});
  detail::parallel_for(static_cast<std::size_t>(ao.chains), ao.threads, [&](std::size_t c) {
    chains[c] = detail::anneal_chain(n, m, detail::splitmix64(ao.seed + c), ao);
  });
  std::size_t pick = 0;
  std::size_t evaluated = 0;
  for (std::size_t c = 0; c < chains.size(); ++c) {
    evaluated += chains[c].evaluated;
    if (chains[c].value > chains[pick].value) pick = c;
  }
  AdversaryResult out = std::move(chains[pick]);
  out.evaluated = evaluated;
  out.params["best_chain"] = pick;
  return out;
}

// ---------------------------------------------------------------------------
// Conformance

/// For n <= min(4, n_max) and every m: exhaustive value equals the brute-force
/// oracle and annealing reaches it; singletons give 1/C(n, floor(n/2)).
/// Edge reduction is checked on random edge markings for n <= min(8, n_max).
/// The extremal table is returned in `constants.table`.
inline CheckReport game_values_check(int n_max, std::uint64_t seed, std::size_t anneal_budget = 3000) {
  CheckReport rep("game.corollary", "GAME-COROLLARY", 0, n_max);
  rep.params = {{"seed", seed}, {"anneal_budget", anneal_budget}};
  json table = json::array();
  for (int n = 0; n <= std::min(4, n_max); ++n) {
    for (int m = 0; m <= static_cast<int>(cube_size(n)); ++m) {
      const AdversaryResult ex = exhaustive_adversary(n, m);
      const Fraction oracle = exhaustive_value_bruteforce(n, m);
      AnnealOptions ao;
      ao.seed = seed;
      ao.budget = anneal_budget;
      ao.chains = 2;
      const AdversaryResult an = anneal_adversary(n, m, ao);
      const std::string where = "n=" + std::to_string(n) + " m=" + std::to_string(m);
      if (!(ex.value == oracle)) rep.fail(where + ": exhaustive " + ex.value.str() + " vs oracle " + oracle.str());
      if (!(an.value == ex.value)) rep.fail(where + ": anneal " + an.value.str() + " vs exhaustive " + ex.value.str());
      if (!(best_center(ex.marking).value == ex.value)) rep.fail(where + ": marking does not reproduce its value");
      if (m == 1 && !(ex.value == Fraction{1, binomial_i64(n, n / 2)})) rep.fail(where + ": singleton value");
      table.push_back({{"n", n}, {"m", m}, {"epsilon", ex.marking.epsilon().str()}, {"value", ex.value.str()},
                       {"ratio", json_number(ex.ratio())}});
    }
  }
  std::mt19937_64 rng(detail::splitmix64(seed));
  for (int n = 1; n <= std::min(8, n_max); ++n) {
    for (int trial = 0; trial < 4; ++trial) {
      MarkingSet F(n, MarkingKind::edge);
      const std::uint64_t keep = 1 + rng() % 6;
      for (std::size_t e = 0; e < F.size(); ++e)
        if (rng() % keep == 0) F.set(e);
      rep.absorb(edge_reduction_check(F));
    }
  }
  rep.constants = {{"table", table}};
  return rep;
}

}  // namespace hcube
