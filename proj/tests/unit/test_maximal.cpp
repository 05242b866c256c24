#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "hcube/maximal.hpp"
#include "oracles.hpp"

using namespace hcube;

namespace {

// max over members of the dense-matrix image, per vertex.
std::vector<double> dense_maximal(const OperatorFamily& fam, const std::vector<double>& f) {
  const std::size_t N = f.size();
  std::vector<double> best(N, -INFINITY);
  for (const auto& m : fam.members) {
    const auto a = dense_matrix(with_weights(m, KrawtchoukTable(fam.n)));
    for (std::size_t x = 0; x < N; ++x) {
      double s = 0.0;
      for (std::size_t y = 0; y < N; ++y) s += a[x * N + y] * f[y];
      best[x] = std::max(best[x], s);
    }
  }
  return best;
}

OperatorFamily single(RadialOperator op) {
  OperatorFamily fam;
  fam.n = op.n;
  fam.name = "single";
  fam.members.push_back(std::move(op));
  fam.index.push_back(0);
  return fam;
}

}  // namespace

TEST(MaximalApply, Examples) {
  std::mt19937_64 rng(1);
  const int n = 5;
  const KrawtchoukTable t(n);
  const CubeFunction f(n, oracle::random_nonnegative(n, rng));
  EXPECT_EQ(maximal_apply(single(identity_operator(n)), f).values, f);

  const auto S = spherical_family(t, n);
  const auto one = maximal_apply(S, CubeFunction::constant(n, 1.0));
  for (Vertex x = 0; x < one.values.size(); ++x) {
    EXPECT_NEAR(one.values[x], 1.0, 1e-12);
    EXPECT_EQ(one.selector[x], 0u);
  }

  const Vertex v = 0b10110;
  const auto d = maximal_apply(S, CubeFunction::delta(n, v));
  for (Vertex x = 0; x < d.values.size(); ++x) {
    EXPECT_NEAR(d.values[x], 1.0 / binomial(n, hamming_distance(x, v)), 1e-14);
    EXPECT_EQ(static_cast<int>(d.selector[x]), hamming_distance(x, v));
  }
}

TEST(MaximalApply, MatchesDenseMatrices) {
  std::mt19937_64 rng(2);
  for (int n = 1; n <= 6; ++n) {
    const KrawtchoukTable t(n);
    const auto S = spherical_family(t, n);
    const auto fams = {S, spherical_family(t, n / 2), senate_family(S), senate_noise_T_family(n, default_t_grid(n, 8)),
                       senate_noise_window_family(n)};
    for (const auto& fam : fams) {
      const auto f = oracle::random_nonnegative(n, rng);
      const auto expect = dense_maximal(fam, f);
      const auto got = maximal_apply(fam, CubeFunction(n, f));
      for (Vertex x = 0; x < f.size(); ++x) EXPECT_NEAR(got.values[x], expect[x], 1e-12) << fam.name;
    }
  }
}

TEST(MaximalApply, Errors) {
  const auto S = spherical_family(KrawtchoukTable(3), 3);
  CubeFunction f = CubeFunction::delta(3, 0);
  f[1] = -0.5;
  EXPECT_THROW(maximal_apply(S, f), DomainError);
  EXPECT_NO_THROW(maximal_apply_signed(S, f));
  EXPECT_THROW(maximal_apply(OperatorFamily{}, CubeFunction(0)), DomainError);
  EXPECT_THROW(maximal_apply(S, CubeFunction(4)), DimensionMismatch);
}

TEST(WeakRatio, Examples) {
  const std::vector<double> v{3.0, 1.0, 0.0, 0.0};
  EXPECT_DOUBLE_EQ(weak_ratio(v, 2.0), 1.5);
  EXPECT_THROW(weak_ratio(v, 0.0), DomainError);
  EXPECT_NEAR(weak_l1_ratio(single(identity_operator(4)), CubeFunction::delta(4, 7)), 1.0, 1e-15);
}

TEST(L1Norm, ExactValues) {
  EXPECT_EQ(l1_norm_check(0), Rational(1));
  EXPECT_EQ(l1_norm_check(2), Rational(3));
  EXPECT_EQ(l1_norm_check(16), Rational(17));
  EXPECT_EQ(l1_norm_check(24), Rational(25));
  EXPECT_TRUE(l1_norm_report(0, 12).pass);
}

TEST(L1Norm, AgreesWithFloatingMaximal) {
  for (int n = 1; n <= 10; ++n) {
    const auto S = spherical_family(KrawtchoukTable(n), n);
    const double v = lp_norm(maximal_apply(S, CubeFunction::delta(n, 0)).values, 1.0);
    EXPECT_NEAR(v, to_double(l1_norm_check(n)), 1e-10);
  }
}

TEST(Marcinkiewicz, Bound) {
  EXPECT_NEAR(marcinkiewicz_bound(2.0), 2.0 * std::numbers::sqrt2, 1e-15);
  EXPECT_EQ(marcinkiewicz_bound(INFINITY), 2.0);
  EXPECT_NEAR(marcinkiewicz_bound(3.0), 2.0 * std::cbrt(1.5), 1e-15);
  EXPECT_THROW(marcinkiewicz_bound(1.0), DomainError);
  EXPECT_TRUE(marcinkiewicz_check(6, 50, 9).pass);
}

TEST(NormEstimates, SmallCubes) {
  const auto S1 = spherical_family(KrawtchoukTable(1), 1);
  const auto ex = norm2_exhaustive_small(S1);
  EXPECT_NEAR(ex.value, std::numbers::sqrt2, 1e-9);
  EXPECT_NEAR(ex.witness[0] * ex.witness[1], 0.0, 1e-9);
  EXPECT_NEAR(norm2_ascent(S1).value, std::numbers::sqrt2, 1e-12);
  EXPECT_NEAR(norm2_ascent(spherical_family(KrawtchoukTable(0), 0)).value, 1.0, 1e-15);
  EXPECT_NEAR(norm2_exhaustive_small(spherical_family(KrawtchoukTable(0), 0)).value, 1.0, 1e-15);
  EXPECT_NEAR(norm2_exhaustive_small(single(spherical(2, 0))).value, 1.0, 1e-12);
  EXPECT_THROW(norm2_exhaustive_small(spherical_family(KrawtchoukTable(4), 4)), CapacityError);
}

TEST(NormEstimates, AscentIsALowerBoundAndDeterministic) {
  for (int n = 2; n <= 3; ++n) {
    const auto S = spherical_family(KrawtchoukTable(n), n);
    const auto a = norm2_ascent(S, {.seed = 5, .restarts = 12});
    const auto e = norm2_exhaustive_small(S);
    EXPECT_LE(a.value, e.value + 1e-9);
    EXPECT_NEAR(a.value, e.value, 1e-3);
    EXPECT_NEAR(maximal_ratio2(S, a.witness), a.value, 1e-12);
    for (std::size_t i = 1; i < a.history.size(); ++i) EXPECT_GE(a.history[i], a.history[i - 1]);
  }
  const auto S8 = spherical_family(KrawtchoukTable(8), 8);
  const auto x = norm2_ascent(S8, {.seed = 3, .restarts = 6, .threads = 1});
  const auto y = norm2_ascent(S8, {.seed = 3, .restarts = 6, .threads = 3});
  EXPECT_EQ(x.value, y.value);
  EXPECT_EQ(x.witness, y.witness);
  EXPECT_GE(x.value, std::numbers::sqrt2 - 1e-6);
}
