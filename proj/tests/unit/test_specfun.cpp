#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "dsplim/sampling.hpp"
#include "dsplim/specfun.hpp"

namespace sf = dsplim::specfun;

namespace {

// sum_{j<k} e^-x x^j / j!, accumulated term by term in long double.
double poisson_tail_sum(int k, double x) {
  long double term = std::exp(-static_cast<long double>(x));
  long double sum = 0;
  for (int j = 0; j < k; ++j) {
    sum += term;
    term *= x / (j + 1.0L);
  }
  return static_cast<double>(sum);
}

// I_x(a, b) for integer a, b is P(Binomial(a+b-1, x) >= a).
double binomial_upper(int a, int b, double x) {
  const int m = a + b - 1;
  long double sum = 0;
  for (int j = a; j <= m; ++j) {
    const long double lc = std::lgamma(m + 1.0L) - std::lgamma(j + 1.0L) - std::lgamma(m - j + 1.0L);
    sum += std::exp(lc + j * std::log(static_cast<long double>(x)) + (m - j) * std::log1p(-static_cast<long double>(x)));
  }
  return static_cast<double>(sum);
}

}  // namespace

TEST(LogGamma, MatchesLogFactorial) {
  long double acc = 0;
  for (int k = 1; k <= 170; ++k) {
    EXPECT_NEAR(sf::log_gamma(k), static_cast<double>(acc), 1e-12 * std::max(1.0L, acc)) << k;
    acc += std::log(static_cast<long double>(k));
  }
  EXPECT_NEAR(sf::log_gamma(0.5), 0.5 * std::log(M_PI), 1e-15);
  EXPECT_THROW(sf::log_gamma(0.0), dsplim::DomainError);
  EXPECT_THROW(sf::log_gamma(-1.0), dsplim::DomainError);
}

TEST(GammaCdf, PoissonTailIdentity) {
  for (int k = 1; k <= 60; k += 3) {
    for (double x : {0.01, 0.5, 1.0, 3.0, 10.0, 25.0, 60.0, 100.0}) {
      EXPECT_NEAR(sf::gamma_cdf(k, 1.0, x), 1.0 - poisson_tail_sum(k, x), 1e-12) << k << ' ' << x;
      EXPECT_NEAR(sf::gamma_sf(k, 1.0, x), poisson_tail_sum(k, x), 1e-12) << k << ' ' << x;
    }
  }
}

TEST(GammaCdf, ScaleAndConventions) {
  EXPECT_DOUBLE_EQ(sf::gamma_cdf(3.0, 0.25, 1.0), sf::gamma_cdf(3.0, 1.0, 4.0));
  EXPECT_EQ(sf::gamma_cdf(0.0, 1.0, 0.0), 1.0);
  EXPECT_EQ(sf::gamma_cdf(0.0, 1.0, 5.0), 1.0);
  EXPECT_EQ(sf::gamma_sf(0.0, 1.0, 5.0), 0.0);
  EXPECT_EQ(sf::gamma_cdf(2.0, 1.0, 0.0), 0.0);
  EXPECT_EQ(sf::gamma_cdf(2.0, 1.0, INFINITY), 1.0);
  EXPECT_THROW(sf::gamma_cdf(-1.0, 1.0, 1.0), dsplim::DomainError);
  EXPECT_THROW(sf::gamma_cdf(1.0, 0.0, 1.0), dsplim::DomainError);
  EXPECT_THROW(sf::gamma_cdf(1.0, 1.0, -1.0), dsplim::DomainError);
}

TEST(GammaCdf, MonotoneInXAndShape) {
  for (double shape : {1.0, 2.5, 10.0, 101.0}) {
    double prev = 0.0;
    for (double x = 0.0; x < 200.0; x += 0.37) {
      const double v = sf::gamma_cdf(shape, 1.0, x);
      EXPECT_GE(v, prev);
      EXPECT_LE(v, 1.0);
      prev = v;
    }
  }
  for (double x : {0.3, 2.0, 15.0, 80.0}) {
    double prev = 1.0;
    for (double shape = 1.0; shape < 120.0; shape += 0.9) {
      const double v = sf::gamma_cdf(shape, 1.0, x);
      EXPECT_LE(v, prev);
      prev = v;
    }
  }
}

TEST(BetaCdf, BinomialSumIdentity) {
  for (int a = 1; a <= 40; a += 3) {
    for (int b = 1; b <= 40; b += 4) {
      for (double x : {0.01, 0.1, 0.3, 0.5, 0.77, 0.95, 0.999}) {
        EXPECT_NEAR(sf::beta_cdf(x, a, b), binomial_upper(a, b, x), 1e-12) << a << ' ' << b << ' ' << x;
      }
    }
  }
}

TEST(BetaCdf, Symmetry) {
  for (double a : {1.0, 2.5, 17.0, 90.0, 200.0}) {
    for (double b : {1.0, 3.0, 44.5, 200.0}) {
      for (double x : {0.001, 0.2, 0.5, 0.8, 0.999}) {
        EXPECT_NEAR(sf::beta_cdf(x, a, b), 1.0 - sf::beta_cdf(1.0 - x, b, a), 1e-13);
        EXPECT_NEAR(sf::beta_cdf(x, a, b) + sf::beta_sf(x, a, b), 1.0, 1e-15);
      }
    }
  }
}

TEST(BetaCdf, PointMassConventions) {
  EXPECT_EQ(sf::beta_cdf(0.0, 0.0, 3.0), 1.0);
  EXPECT_EQ(sf::beta_cdf(0.4, 0.0, 3.0), 1.0);
  EXPECT_EQ(sf::beta_cdf(0.4, 3.0, 0.0), 0.0);
  EXPECT_EQ(sf::beta_cdf(1.0, 3.0, 0.0), 1.0);
  EXPECT_EQ(sf::beta_pdf(0.4, 0.0, 3.0), 0.0);
  EXPECT_TRUE(std::isinf(sf::beta_pdf(0.0, 0.0, 3.0)));
  EXPECT_THROW(sf::beta_cdf(0.5, 0.0, 0.0), dsplim::DomainError);
  EXPECT_THROW(sf::beta_cdf(1.5, 1.0, 1.0), dsplim::DomainError);
}

TEST(BetaCdf, Monotone) {
  double prev = 0.0;
  for (double x = 0.0; x <= 1.0; x += 1.0 / 512) {
    const double v = sf::beta_cdf(std::min(x, 1.0), 7.5, 3.25);
    EXPECT_GE(v, prev);
    prev = v;
  }
}

TEST(BetaDensity, MatchesBetaPdf) {
  const sf::BetaDensity d(4.0, 9.5);
  for (double x : {0.01, 0.2, 0.5, 0.9})
    EXPECT_NEAR(d(x), sf::beta_pdf(x, 4.0, 9.5), 1e-13 * sf::beta_pdf(x, 4.0, 9.5));
  EXPECT_NEAR(d.mean(), 4.0 / 13.5, 1e-15);
}

TEST(Integrate, BetaPdfHasUnitMass) {
  for (double a : {1.0, 2.0, 7.0, 33.0, 100.0}) {
    for (double b : {1.0, 5.0, 50.0, 100.0}) {
      const sf::BetaDensity d(a, b);
      EXPECT_NEAR(sf::integrate(d, 0.0, 1.0), 1.0, 1e-8) << a << ' ' << b;
    }
  }
}

TEST(Integrate, SimpsonAndKronrodAgree) {
  auto f = [](double x) { return std::exp(-x) * std::sin(3 * x) * std::sqrt(x + 1.0); };
  sf::QuadratureConfig gk;
  gk.rule = sf::QuadratureRule::gauss_kronrod;
  const double s = sf::integrate(f, 0.0, 10.0);
  const double k = sf::integrate(f, 0.0, 10.0, gk);
  EXPECT_NEAR(s, k, 1e-9);
}

TEST(Integrate, RectangleRuleIsSelectable) {
  sf::QuadratureConfig rect;
  rect.rule = sf::QuadratureRule::rectangle;
  rect.rectangle_points = 100;
  // Midpoint rule on x^2 over [0,1] has error exactly -h^2/12.
  const double v = sf::integrate([](double x) { return x * x; }, 0.0, 1.0, rect);
  EXPECT_NEAR(v, 1.0 / 3.0 - 1.0 / (12.0 * 100 * 100), 1e-15);
}

TEST(Integrate, ExhaustedBudgetThrows) {
  sf::QuadratureConfig cfg;
  cfg.max_subdivisions = 4;
  cfg.rel_tol = 1e-14;
  cfg.abs_tol = 1e-300;
  EXPECT_THROW(sf::integrate([](double x) { return std::sin(1.0 / (x + 1e-3)); }, 0.0, 1.0, cfg),
               dsplim::QuadratureError);
}

TEST(GammaExceedance, EqualScalesReduceToBeta) {
  // sb == sc: sb*B + sb*C = sb*Gamma(b+c).
  for (auto [a, b, c] : {std::tuple{5.0, 11.0, 101.0}, {2.0, 1.0, 3.0}, {40.0, 7.5, 0.5}}) {
    for (double sa : {0.5, 1.0, 3.0}) {
      const double sb = 0.3;
      const double ref = sf::beta_cdf(sa / (sa + sb), b + c, a);
      // Default exceedance quadrature targets 1e-10 relative error.
      EXPECT_NEAR(sf::gamma_exceedance(a, sa, b, sb, c, sb), ref, 1e-10);
    }
  }
}

TEST(GammaExceedance, AlternatePairingByNestedQuadrature) {
  // Condition on B and C instead: P = E[Q(a, (sb B + sc C)/sa)].
  struct Case { double a, sa, b, sb, c, sc; };
  for (const Case k : {Case{5, 1, 11, 1 / 33.0, 101, 0.02}, Case{3, 1, 2, 1 / 3.3, 4, 0.7}, Case{13, 1, 1, 0.3, 26, 0.1},
                       Case{50, 1, 21, 1 / 3.3, 31, 0.5}}) {
    sf::QuadratureConfig cfg;
    cfg.rel_tol = 1e-11;
    cfg.abs_tol = 1e-14;
    const double hb = k.b + 12 * std::sqrt(k.b) + 12, hc = k.c + 12 * std::sqrt(k.c) + 12;
    auto outer = [&](double y) {
      const double fy = std::exp((k.b - 1) * std::log(y) - y - sf::log_gamma(k.b));
      auto inner = [&](double z) {
        const double fz = std::exp((k.c - 1) * std::log(z) - z - sf::log_gamma(k.c));
        return fz * sf::gamma_sf(k.a, 1.0, (k.sb * y + k.sc * z) / k.sa);
      };
      return fy * sf::integrate(inner, 1e-300, hc, cfg);
    };
    const double ref = sf::integrate(outer, 1e-300, hb, cfg);
    EXPECT_NEAR(sf::gamma_exceedance(k.a, k.sa, k.b, k.sb, k.c, k.sc), ref, 1e-8) << k.a << ' ' << k.c;
  }
}

TEST(GammaExceedance, GammaRatioMonteCarlo) {
  dsplim::sampling::RngHandle rng(7, dsplim::sampling::stream_id("specfun-mc"));
  const int N = 200000;
  struct Case { double a, sa, b, sb, c, sc; };
  for (const Case k : {Case{3, 1, 2, 0.3, 4, 0.2}, Case{12, 1, 8, 0.5, 20, 0.4}}) {
    int hit = 0;
    for (int i = 0; i < N; ++i) {
      const double A = dsplim::sampling::sample_gamma(rng, k.a, 1.0);
      const double B = dsplim::sampling::sample_gamma(rng, k.b, 1.0);
      const double C = dsplim::sampling::sample_gamma(rng, k.c, 1.0);
      hit += k.sa * A > k.sb * B + k.sc * C;
    }
    const double p = sf::gamma_exceedance(k.a, k.sa, k.b, k.sb, k.c, k.sc);
    const double se = std::sqrt(p * (1 - p) / N);
    EXPECT_NEAR(static_cast<double>(hit) / N, p, 4 * se + 1e-12);
  }
}

TEST(GammaExceedance, DegenerateShapes) {
  EXPECT_EQ(sf::gamma_exceedance(0, 1, 3, 1, 3, 1), 0.0);
  EXPECT_EQ(sf::gamma_exceedance(3, 1, 0, 1, 0, 1), 1.0);
  EXPECT_EQ(sf::gamma_exceedance(3, 1, 0, 1, 2, 0.0), 1.0);
  EXPECT_NEAR(sf::gamma_exceedance(4, 1, 3, 0.5, 0, 1), sf::beta_cdf(1 / 1.5, 3, 4), 1e-15);
  EXPECT_NEAR(sf::gamma_exceedance(4, 1, 0, 0.5, 3, 2.0), sf::beta_cdf(1 / 3.0, 3, 4), 1e-15);
  EXPECT_THROW(sf::gamma_exceedance(-1, 1, 1, 1, 1, 1), dsplim::DomainError);
}

TEST(GammaExceedance, MonotoneInThreshold) {
  double prev = 1.0;
  for (double x = 0; x < 200; x += 2.5) {
    const double v = sf::gamma_exceedance(25, 1, 100, 1 / 33.0, 101, x / 100.0);
    EXPECT_LE(v, prev + 1e-15);
    prev = v;
  }
}
