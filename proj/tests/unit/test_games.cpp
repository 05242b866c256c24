#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include "hcube/games.hpp"

using namespace hcube;

namespace {

MarkingSet random_marking(int n, MarkingKind kind, std::mt19937_64& rng, int keep) {
  MarkingSet F(n, kind);
  for (std::size_t i = 0; i < F.size(); ++i)
    if (rng() % keep == 0) F.set(i);
  return F;
}

// Coordinate permutation followed by translation.
Vertex transform(Vertex v, const std::vector<int>& perm, Vertex shift) {
  Vertex out = 0;
  for (std::size_t i = 0; i < perm.size(); ++i)
    if ((v >> i) & 1u) out |= Vertex{1} << perm[i];
  return out ^ shift;
}

}  // namespace

TEST(Fraction, ReducedAndOrdered) {
  EXPECT_EQ(Fraction(2, 4), Fraction(1, 2));
  EXPECT_EQ(Fraction(2, 4).str(), "1/2");
  EXPECT_TRUE(Fraction(1, 3) < Fraction(1, 2));
  EXPECT_EQ(Fraction(0, 7), Fraction(0, 1));
}

TEST(EdgeIndex, BijectionAndRoundTrip) {
  for (int n = 1; n <= 7; ++n) {
    std::set<std::size_t> seen;
    for (Vertex y = 0; y < cube_size(n); ++y)
      for (int i = 0; i < n; ++i) {
        if ((y >> i) & 1u) continue;
        const std::size_t e = edge_index(n, y, i);
        ASSERT_LT(e, edge_count(n));
        EXPECT_TRUE(seen.insert(e).second);
        const auto [lo, dir] = edge_endpoints(n, e);
        EXPECT_EQ(lo, y);
        EXPECT_EQ(dir, i);
        EXPECT_EQ(e >> (n - 1), static_cast<std::size_t>(i));
      }
    EXPECT_EQ(seen.size(), edge_count(n));
  }
}

TEST(DensityProfile, Examples) {
  const int n = 4;
  MarkingSet all(n, MarkingKind::vertex);
  for (std::size_t v = 0; v < all.size(); ++v) all.set(v);
  for (double p : density_profile(all, 5)) EXPECT_EQ(p, 1.0);
  const Vertex v = 0b0110;
  const MarkingSet one = MarkingSet::vertices_from_mask(n, std::uint64_t{1} << v);
  for (Vertex x = 0; x < cube_size(n); ++x) {
    const auto p = density_profile(one, x);
    const int d = hamming_distance(x, v);
    for (int k = 0; k <= n; ++k) EXPECT_DOUBLE_EQ(p[k], k == d ? 1.0 / binomial(n, d) : 0.0);
  }
  EXPECT_EQ(density_profile(one, v ^ 0b1111)[4], 1.0);
  EXPECT_THROW(density_profile(MarkingSet(2, MarkingKind::edge), 0), DomainError);
  EXPECT_THROW(density_profile(one, 16), DomainError);
}

TEST(BestCenter, Examples) {
  EXPECT_EQ(best_center(MarkingSet(4, MarkingKind::vertex)).value, Fraction(0, 1));
  const auto r4 = best_center(MarkingSet::vertices_from_mask(4, 1));
  EXPECT_EQ(r4.value, Fraction(1, 6));
  EXPECT_EQ(hamming_distance(r4.best_center, 0), 2);
  EXPECT_EQ(best_center(MarkingSet::vertices_from_mask(3, 1)).value, Fraction(1, 3));
  EXPECT_TRUE(std::isnan(best_center(MarkingSet(3, MarkingKind::vertex)).ratio()));
}

TEST(BestCenter, MatchesBruteForce) {
  std::mt19937_64 rng(31);
  for (int n = 1; n <= 8; ++n)
    for (int trial = 0; trial < 6; ++trial)
      for (MarkingKind kind : {MarkingKind::vertex, MarkingKind::edge}) {
        const auto F = random_marking(n, kind, rng, 2 + trial);
        const auto fast = best_center(F);
        const auto slow = best_center_bruteforce(F);
        EXPECT_EQ(fast.value, slow.value) << n << " " << to_string(kind);
        EXPECT_EQ(fast.best_center, slow.best_center);
      }
}

TEST(BestCenter, InvariantUnderAutomorphisms) {
  std::mt19937_64 rng(32);
  for (int n = 2; n <= 7; ++n) {
    const auto F = random_marking(n, MarkingKind::vertex, rng, 3);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const Vertex shift = rng() % cube_size(n);
    MarkingSet G(n, MarkingKind::vertex);
    for (std::size_t v : F.marked()) G.set(transform(v, perm, shift));
    EXPECT_EQ(best_center(F).value, best_center(G).value);
  }
}

TEST(BestCenter, MonotoneInTheMarking) {
  std::mt19937_64 rng(33);
  const int n = 6;
  MarkingSet F(n, MarkingKind::vertex);
  Fraction prev{0, 1};
  std::vector<Vertex> order(cube_size(n));
  std::iota(order.begin(), order.end(), Vertex{0});
  std::shuffle(order.begin(), order.end(), rng);
  for (Vertex v : order) {
    F.set(v);
    const Fraction cur = best_center(F).value;
    EXPECT_FALSE(cur < prev);
    prev = cur;
  }
  EXPECT_EQ(prev, Fraction(1, 1));
}

TEST(EdgeReduce, Examples) {
  MarkingSet none(3, MarkingKind::edge);
  const auto zero = edge_reduce(none);
  for (double v : zero.values()) EXPECT_EQ(v, 0.0);
  MarkingSet all(3, MarkingKind::edge);
  for (std::size_t e = 0; e < all.size(); ++e) all.set(e);
  const auto one = edge_reduce(all);
  for (double v : one.values()) EXPECT_DOUBLE_EQ(v, 1.0);
  // n = 2, the single edge {00, 01} in direction 0: f = 1/2 at its endpoints.
  const std::size_t e = edge_index(2, 0, 0);
  const auto f = edge_reduce(MarkingSet(2, MarkingKind::edge, std::vector<std::size_t>{e}));
  EXPECT_EQ(f[0], 0.5);
  EXPECT_EQ(f[1], 0.5);
  EXPECT_EQ(f[2], 0.0);
  EXPECT_EQ(f[3], 0.0);
  EXPECT_THROW(edge_reduce(MarkingSet(2, MarkingKind::vertex)), DomainError);
}

TEST(EdgeReduce, DominationHolds) {
  std::mt19937_64 rng(34);
  for (int n = 1; n <= 8; ++n)
    for (int keep : {1, 2, 5, 11}) EXPECT_TRUE(edge_reduction_check(random_marking(n, MarkingKind::edge, rng, keep)).pass);
}

TEST(Exhaustive, MatchesBruteForceAndLimits) {
  for (int n = 0; n <= 3; ++n)
    for (int m = 0; m <= static_cast<int>(cube_size(n)); ++m)
      EXPECT_EQ(exhaustive_adversary(n, m).value, exhaustive_value_bruteforce(n, m)) << n << " " << m;
  EXPECT_EQ(exhaustive_adversary(3, 0).value, Fraction(0, 1));
  EXPECT_EQ(exhaustive_adversary(3, 8).value, Fraction(1, 1));
  EXPECT_EQ(exhaustive_adversary(3, 1).value, Fraction(1, 3));
  EXPECT_EQ(exhaustive_adversary(4, 1).value, Fraction(1, 6));
  EXPECT_THROW(exhaustive_adversary(5, 1), CapacityError);
  EXPECT_THROW(exhaustive_adversary(3, 9), DomainError);
}

TEST(Anneal, DeterministicMonotoneAndSound) {
  AnnealOptions ao;
  ao.seed = 17;
  ao.budget = 2000;
  ao.chains = 3;
  const auto a = anneal_adversary(4, 3, ao);
  ao.threads = 3;
  const auto b = anneal_adversary(4, 3, ao);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.marking, b.marking);
  EXPECT_EQ(a.marking.count(), 3u);
  for (std::size_t i = 1; i < a.trace.size(); ++i) EXPECT_GT(a.trace[i].second, a.trace[i - 1].second);
  EXPECT_EQ(best_center(a.marking).value, a.value);
  EXPECT_FALSE(exhaustive_adversary(4, 3).value < a.value);
  EXPECT_EQ(anneal_adversary(3, 1, ao).value, Fraction(1, 3));
  EXPECT_EQ(anneal_adversary(4, 1, ao).value, Fraction(1, 6));
  EXPECT_THROW(anneal_adversary(17, 1, ao), CapacityError);
}

TEST(Marking, JsonRoundTripAndErrors) {
  std::mt19937_64 rng(35);
  const auto F = random_marking(5, MarkingKind::edge, rng, 3);
  EXPECT_EQ(MarkingSet::from_json(F.to_json()), F);
  const std::string path = (std::filesystem::temp_directory_path() / "hcube_marking.json").string();
  save_marking(path, F);
  EXPECT_EQ(load_marking(path), F);
  std::ofstream(path) << "[1, 2";
  EXPECT_THROW(load_marking(path), FormatError);
  std::filesystem::remove(path);
  EXPECT_THROW(MarkingSet::from_json({{"n", 2}, {"kind", "face"}, {"marked", json::array()}}), FormatError);
  EXPECT_THROW(MarkingSet::from_json({{"n", 2}, {"kind", "vertex"}}), FormatError);
  EXPECT_THROW(MarkingSet::from_json({{"n", 2}, {"kind", "vertex"}, {"marked", {9}}}), DomainError);
  EXPECT_EQ(F.epsilon(), Fraction(static_cast<std::int64_t>(F.count()), 80));
}

TEST(Results, CsvRow) {
  const auto r = exhaustive_adversary(3, 1);
  EXPECT_EQ(std::string(kResultCsvHeader), "n,m,epsilon,value,ratio,method,seed");
  const std::string row = result_csv_row(r);
  EXPECT_EQ(row.substr(0, 10), "3,1,0.125,");
  EXPECT_NE(row.find(",exhaustive,0"), std::string::npos);
}
