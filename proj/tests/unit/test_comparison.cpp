#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>
#include <random>

#include "hcube/comparison.hpp"
#include "oracles.hpp"

using namespace hcube;

TEST(RMax, Values) {
  EXPECT_EQ(r_max(8, Parity::even), 2);
  EXPECT_EQ(r_max(8, Parity::odd), 1);
  EXPECT_EQ(r_max(9, Parity::odd), 1);
  EXPECT_EQ(r_max(4, Parity::odd), 0);
  EXPECT_EQ(r_max(1, Parity::odd), -1);
  EXPECT_EQ(r_max(1, Parity::even), 0);
}

TEST(Identities, AbelAndDifferenceExact) {
  for (int n = 0; n <= 14; ++n) EXPECT_TRUE(abel_identity_check(n).pass) << n;
  for (int n = 2; n <= 14; ++n) EXPECT_TRUE(difference_identity_check(n).pass) << n;
  EXPECT_THROW(difference_identity_check(1), DomainError);
}

TEST(Identities, DifferenceHandExample) {
  // kappa_1^{(3)}(1) - kappa_1^{(3)}(0) = 1/3 - 1 = -(2/3) kappa_0^{(2)}(0).
  const KrawtchoukTable t3(3), t2(2);
  EXPECT_EQ(t3.exact(1, 1) - t3.exact(1, 0), Rational(-2, 3));
  EXPECT_EQ(Rational(-2, 3) * t2.exact(0, 0), Rational(-2, 3));
}

TEST(SteinSums, MatchDirectSumOracle) {
  for (int n = 1; n <= 12; ++n) {
    const auto s = stein_sums(n);
    for (Parity par : {Parity::even, Parity::odd}) {
      const int e = static_cast<int>(par);
      for (int x = 0; x <= n; ++x) {
        Rational d = 0;
        for (int k = 1; k <= r_max(n, par); ++k) {
          const Rational diff = oracle::kappa(n, 2 * k + e, x) - oracle::kappa(n, 2 * k - 2 + e, x);
          d += k * diff * diff;
        }
        EXPECT_NEAR((par == Parity::even ? s.D_even : s.D_odd)[x], to_double(d), 1e-15) << n << " " << x;
      }
    }
    EXPECT_EQ(s.D_even[0], 0.0);
    EXPECT_EQ(s.D_odd[0], 0.0);
    EXPECT_EQ(s.identity_residuals["collapsed_form"].get<double>(), 0.0);
    EXPECT_EQ(s.identity_residuals["level_one_closed_form"].get<double>(), 0.0);
  }
}

TEST(SteinSums, LevelOneClosedForm) {
  // sum_{k=1}^{r_max} 16 k / n^2: n = 8 gives r_max = 2 (even) and 1 (odd).
  const auto s = stein_sums(8);
  EXPECT_NEAR(s.D_even[1], 16.0 * 3 / 64, 1e-15);
  EXPECT_NEAR(s.D_odd[1], 16.0 / 64, 1e-15);
}

TEST(SteinSums, CapHolds) {
  const double c = std::log(3.0);
  for (int n = 1; n <= 40; ++n) EXPECT_TRUE(stein_check(stein_sums(n), c).pass) << n;
  EXPECT_THROW(stein_sums(0), DomainError);
}

TEST(ROperator, ConstantGivesZero) {
  for (int n = 1; n <= 9; ++n)
    for (Parity par : {Parity::even, Parity::odd}) {
      const auto r = r_operator_apply(CubeFunction::constant(n, 3.0), par);
      for (double v : r.values()) EXPECT_NEAR(v, 0.0, 1e-12);
    }
}

TEST(ROperator, PointMassMatchesDefiningSum) {
  const int n = 4;
  std::vector<double> d(cube_size(n), 0.0);
  d[0] = 1.0;
  const auto s = oracle::sphere_means(n, d);
  for (Parity par : {Parity::even, Parity::odd}) {
    const int e = static_cast<int>(par);
    const auto r = r_operator_apply(CubeFunction(n, d), par);
    for (Vertex x = 0; x < cube_size(n); ++x) {
      double acc = 0.0;
      for (int k = 1; k <= r_max(n, par); ++k) {
        const double diff = s[x * (n + 1) + 2 * k + e] - s[x * (n + 1) + 2 * k - 2 + e];
        acc += k * diff * diff;
      }
      EXPECT_NEAR(r[x], std::sqrt(0.5 * acc), 1e-15);
    }
  }
}

TEST(ROperator, ParsevalAndSteinBound) {
  std::mt19937_64 rng(21);
  for (int n = 1; n <= 12; ++n) {
    const auto stein = stein_sums(n);
    for (int trial = 0; trial < 10; ++trial) {
      const CubeFunction f(n, oracle::random_nonnegative(n, rng));
      const auto rep = stein_function_check(f, stein);
      EXPECT_TRUE(rep.pass) << n << " " << rep.to_json().dump();
      for (Parity par : {Parity::even, Parity::odd}) {
        const double direct = std::pow(lp_norm(r_operator_apply(f, par), 2.0), 2);
        const double spectral =
            r_norm_sq_spectral(level_energies(f), par == Parity::even ? stein.D_even : stein.D_odd);
        EXPECT_NEAR(direct, spectral, 1e-9 * std::max(spectral, 1e-12));
      }
    }
  }
}

TEST(ROperator, PlainCesaroAverageBreaksTheBoundInLowDimension) {
  // At n = 3 both error terms vanish, yet max(f, S_1 f) differs from max(f, (f + S_1 f)/2).
  const auto rep = stein_function_check(CubeFunction::delta(3, 0), stein_sums(3));
  EXPECT_TRUE(rep.pass);
  EXPECT_EQ(rep.constants["R_norm"].get<double>(), 0.0);
  EXPECT_GT(rep.constants["full_cesaro_excess"].get<double>(), 0.1);
}

TEST(Truncation, ExactOnPointMasses) {
  for (int n = 0; n <= 10; ++n) {
    std::vector<std::int64_t> d(cube_size(n), 0);
    d[0] = 1;
    EXPECT_TRUE(truncation_checks_exact(n, d).pass) << n;
  }
  std::vector<std::int64_t> f(cube_size(8));
  std::mt19937_64 rng(22);
  for (auto& v : f) v = static_cast<std::int64_t>(rng() % 7);
  EXPECT_TRUE(truncation_checks_exact(8, f).pass);
  f[3] = -1;
  EXPECT_THROW(truncation_checks_exact(8, f), DomainError);
}

TEST(Truncation, RandomAndSymmetric) {
  std::mt19937_64 rng(23);
  for (int n = 1; n <= 12; ++n) {
    auto v = oracle::random_nonnegative(n, rng);
    EXPECT_TRUE(truncation_checks(CubeFunction(n, v)).pass) << n;
    const Vertex all = cube_size(n) - 1;
    for (Vertex x = 0; x < v.size(); ++x) v[x ^ all] = v[x] = std::max(v[x], v[x ^ all]);
    EXPECT_TRUE(truncation_checks(CubeFunction(n, v)).pass) << n;
  }
  CubeFunction neg(3);
  neg[0] = -1.0;
  EXPECT_THROW(truncation_checks(neg), DomainError);
}

TEST(NCompare, DecompositionMatches) {
  for (int n : {4, 8}) {
    for (double P : {0.05, 0.2, 0.45}) {
      const auto rep = ncompare_decomposition(n, P);
      EXPECT_TRUE(rep.pass);
      EXPECT_NEAR(rep.constants["mass"].get<double>(), 1.0, 1e-10);
      EXPECT_LE(rep.constants["profile_residual"].get<double>(), 1e-8);
    }
  }
  EXPECT_THROW(ncompare_decomposition(4, 0.0), DomainError);
  EXPECT_THROW(ncompare_decomposition(4, 0.5), DomainError);
}

TEST(NCompare, MassIdentityByQuadrature) {
  // int_0^tau e^{-t}/(2P) dt = (1 - e^{-tau})/(2P) = 1.
  for (double P : {0.01, 0.3}) {
    const double tau = -std::log1p(-2 * P);
    const double mass = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [P](double t) { return std::exp(-t) / (2 * P); }, 0.0, tau);
    EXPECT_NEAR(mass, 1.0, 1e-14);
  }
}

TEST(BinomLowerBound, SmallCases) {
  const auto k0 = binom_lb_check(9, 0);
  EXPECT_TRUE(k0.pass);
  EXPECT_EQ(senate_noise_coeff(9, 0)[0], 1.0);
  for (int n = 9; n <= 20; ++n)
    for (int K = 0; 2 * K <= n; ++K) {
      EXPECT_TRUE(binom_lb_check(n, K).pass) << n << " " << K;
      const auto a = senate_noise_coeff(n, K);
      if (K >= 1) EXPECT_GE(a[0], 1.0 / (8.0 * K));
      for (double ak : a) EXPECT_GE(kBinomConstant * ak * (K + 1), 1.0);
    }
  EXPECT_NEAR(kBinomConstant, 3.0 * std::exp(20.0), 1e-6);
  EXPECT_THROW(binom_lb_check(8, 1), DomainError);
  EXPECT_THROW(binom_lb_check(10, 6), DomainError);
}

TEST(BinomLowerBound, PeakBound) {
  // B(n, k/n, k) >= 1/(3 sqrt k) whenever k + sqrt k <= n/2.
  for (int n = 9; n <= 200; ++n)
    for (int k = 1; k + std::sqrt(k) <= n / 2.0; ++k) {
      const double b = std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) +
                                k * std::log(static_cast<double>(k) / n) + (n - k) * std::log1p(-static_cast<double>(k) / n));
      EXPECT_GE(b, 1.0 / (3.0 * std::sqrt(k)));
    }
}

TEST(SenateChain, PointwiseDomination) {
  std::mt19937_64 rng(24);
  for (int n = 1; n <= 8; ++n) {
    const CubeFunction f(n, oracle::random_nonnegative(n, rng));
    const auto rep = senate_domination_check(f, default_t_grid(n));
    EXPECT_TRUE(rep.pass) << n;
    EXPECT_LE(rep.constants["ratio_sen_ntilde_over_sen_n"].get<double>(), 1.0 + 1e-10);
  }
}

TEST(Ergodic, IdentityIsTightOnPointMass) {
  const int dim = 5;
  std::vector<double> I(dim * dim, 0.0);
  for (int i = 0; i < dim; ++i) I[i * dim + i] = 1.0;
  const auto A = dense_contraction(dim, I);
  const std::vector<double> d{0, 0, 1, 0, 0};
  const auto rep = ergodic_check(A, d, 10);
  EXPECT_TRUE(rep.pass);
  EXPECT_DOUBLE_EQ(rep.constants["worst_ratio"].get<double>(), 1.0);
}

TEST(Ergodic, MatchesIndependentComputation) {
  std::mt19937_64 rng(25);
  const int dim = 7, T = 12;
  const auto a = random_doubly_substochastic(dim, rng);
  const auto f = oracle::random_signed(dim, rng);
  // Brute-force: explicit powers, running averages, weak ratio by thresholding at each value.
  std::vector<double> best(dim, -INFINITY), pw = f, sum(dim, 0.0);
  double worst = 0.0, l1 = 0.0;
  for (double v : f) l1 += std::abs(v);
  for (int t = 0; t <= T; ++t) {
    for (int i = 0; i < dim; ++i) {
      sum[i] += pw[i];
      best[i] = std::max(best[i], sum[i] / (t + 1));
    }
    for (double lam : best) {
      if (lam <= 0) continue;
      int cnt = 0;
      for (double b : best) cnt += b >= lam;
      worst = std::max(worst, lam * cnt / l1);
    }
    std::vector<double> next(dim, 0.0);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) next[i] += a[i * dim + j] * pw[j];
    pw = next;
  }
  const auto rep = ergodic_check(dense_contraction(dim, a), f, T);
  EXPECT_NEAR(rep.constants["worst_ratio"].get<double>(), worst, 1e-12);
  EXPECT_LE(worst, 1.0 + 1e-9);
}

TEST(Ergodic, GeneratorAndValidation) {
  std::mt19937_64 rng(26);
  for (int dim : {1, 3, 17, 64}) {
    const auto a = random_doubly_substochastic(dim, rng);
    for (int i = 0; i < dim; ++i) {
      double r = 0.0, c = 0.0;
      for (int j = 0; j < dim; ++j) {
        EXPECT_GE(a[i * dim + j], 0.0);
        r += a[i * dim + j];
        c += a[j * dim + i];
      }
      EXPECT_LE(r, 1.0);
      EXPECT_LE(c, 1.0);
    }
    EXPECT_NO_THROW(dense_contraction(dim, a));
  }
  EXPECT_THROW(dense_contraction(2, {0.6, 0.6, 0.0, 0.0}), DomainError);
  EXPECT_THROW(dense_contraction(2, {0.6, 0.0, 0.6, 0.0}), DomainError);
  EXPECT_THROW(dense_contraction(2, {-0.1, 0.0, 0.0, 0.0}), DomainError);
  EXPECT_THROW(dense_contraction(2, {0.1, 0.0, 0.0}), DimensionMismatch);
  EXPECT_THROW(lazy_walk(0), CapacityError);
}

TEST(Ergodic, LazyWalkPointMass) {
  for (int n = 1; n <= 6; ++n) {
    std::vector<double> d(cube_size(n), 0.0);
    d[0] = 1.0;
    EXPECT_TRUE(ergodic_check(lazy_walk(n), d, 30).pass) << n;
  }
  EXPECT_TRUE(ergodic_suite(40, 7, 16, 20).pass);
}

TEST(ChainBound, Assembly) {
  const double c = std::log(3.0);
  for (int n = 1; n <= 8; ++n) {
    const auto b = chain_bound(n, c);
    EXPECT_EQ(b.total, n + 1.0);
    EXPECT_TRUE(b.small_n_fallback);
  }
  const auto b16 = chain_bound(16, c);
  const double C_R = stein_sums(16).C_R;
  EXPECT_EQ(b16.C_R, C_R);
  EXPECT_NEAR(b16.total, std::numbers::sqrt2 * (C_R + 3.0 * std::exp(20.0) * 2.0 * std::numbers::sqrt2),
              1e-6 * b16.total);
  EXPECT_GT(b16.total, 3.0 * std::exp(20.0) * 2.0 * std::numbers::sqrt2 * std::numbers::sqrt2);
  EXPECT_LT(b16.empirical_total, b16.total);
  EXPECT_FALSE(b16.to_json()["empirical_is_certified"].get<bool>());
  EXPECT_TRUE(chain_empirical_check(b16, 5, 1).pass);
  EXPECT_THROW(chain_bound(0, c), DomainError);
}
