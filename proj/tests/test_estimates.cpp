#include "superdrift/estimates.hpp"
#include "superdrift/rational.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace superdrift;

TEST(RationalType, Arithmetic) {
  const Rational a(1, 3), b(1, 6);
  EXPECT_EQ(a + b, Rational(1, 2));
  EXPECT_EQ(a - b, b);
  EXPECT_EQ(a * b, Rational(1, 18));
  EXPECT_EQ(a / b, Rational(2));
  EXPECT_EQ(Rational(4, -8), Rational(-1, 2));
  EXPECT_LT(Rational(1, 3), Rational(1, 2));
  EXPECT_THROW(Rational(1, 0), std::domain_error);
  EXPECT_DOUBLE_EQ(static_cast<double>(Rational(3, 4)), 0.75);
}

TEST(Exponents, ExactTables) {
  const auto t1 = exponent_table<Rational>(3, Rational(1));
  EXPECT_EQ(t1.q_star, Rational(5, 4));
  EXPECT_EQ(t1.q_star_star, Rational(5, 3));

  const Rational sp = sigma_prime<Rational>(3);
  EXPECT_EQ(sp, Rational(10, 7));
  const auto t2 = exponent_table<Rational>(3, sp);
  EXPECT_EQ(t2.q_star, Rational(2));
  EXPECT_EQ(t2.gamma, Rational(0));
  EXPECT_EQ(t2.q_star_star, Rational(10, 3));

  const auto t3 = exponent_table<Rational>(3, Rational(2));
  EXPECT_EQ(t3.gamma, Rational(2));
  EXPECT_EQ(t3.q_star_star, Rational(10));
  EXPECT_EQ(Rational(2) * t3.gamma + Rational(2), t3.q_star_star * Rational(3) / Rational(5));
}

TEST(Exponents, SigmaPrimeIsCriticalInEveryDimension) {
  for (int N = 1; N <= 3; ++N) {
    const Rational sp = sigma_prime<Rational>(N);
    EXPECT_EQ(q_star(N, sp), Rational(2));
    EXPECT_EQ(gamma_exponent(N, sp), Rational(0));
    EXPECT_EQ(sigma_exponent<Rational>(N), Rational(2 * (N + 2), N));
  }
}

TEST(Exponents, IdentitiesExactOnRandomRationals) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 300; ++trial) {
    const int N = 1 + static_cast<int>(rng() % 3);
    const std::int64_t den = 1 + static_cast<std::int64_t>(rng() % 97);
    // q in (1, (N+2)/2)
    const std::int64_t lo = den + 1, hi = (N + 2) * den / 2;
    if (hi - 1 < lo) continue;
    const std::int64_t num = lo + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(hi - lo));
    const Rational q(num, den);
    if (!(Rational(2) * q < Rational(N + 2))) continue;
    const auto t = exponent_table<Rational>(N, q);
    EXPECT_EQ(t.gamma_identity_residual(), Rational(0));
    ASSERT_TRUE(t.q_conjugate.has_value());
    EXPECT_EQ(*t.conjugate_identity_residual(), Rational(0));
  }
}

TEST(Exponents, IdentitiesInDoubles) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 500; ++trial) {
    const int N = 1 + static_cast<int>(rng() % 3);
    std::uniform_real_distribution<double> qd(1.0 + 1e-6, 0.5 * (N + 2) - 1e-3);
    const auto t = exponent_table<double>(N, qd(rng));
    EXPECT_NEAR(t.gamma_identity_residual(), 0.0, 1e-12 * std::max(1.0, t.q_star_star));
    EXPECT_NEAR(*t.conjugate_identity_residual(), 0.0, 1e-12 * std::max(1.0, t.q_star_star));
  }
}

TEST(Exponents, RejectsInadmissibleQ) {
  EXPECT_THROW(exponent_table<double>(3, 0.5), std::invalid_argument);
  EXPECT_THROW(exponent_table<double>(3, 2.5), std::invalid_argument);
  EXPECT_THROW(exponent_table<double>(3, 1.2, 0.0, 0.0, 3.0, 2.0), std::invalid_argument);
}

TEST(Regime, Examples) {
  const auto g = classify_regime<Rational>(3, Rational(1, 3), Rational(0), Rational(1));
  EXPECT_EQ(g.regime, Regime::GlobalSmallTheta);
  EXPECT_EQ(g.slack, 0.0);

  const auto l = classify_regime<Rational>(3, Rational(1), Rational(0), Rational(4));
  EXPECT_EQ(l.regime, Regime::LocalLargeTheta);
  EXPECT_NEAR(l.slack, 1.0 / 12.0, 1e-15);

  const auto none = classify_regime<Rational>(3, Rational(1), Rational(1, 4), Rational(2));
  EXPECT_EQ(none.regime, Regime::None);
  EXPECT_LT(none.slack, 0.0);
}

TEST(Regime, ParabolicConditions) {
  // 1/r + theta = 1/(N+2) with N = 3; the global condition also holds and wins.
  const auto p = classify_regime<Rational>(3, Rational(1, 10), Rational(1, 10), Rational(1));
  EXPECT_EQ(p.regime, Regime::GlobalSmallTheta);
  ASSERT_EQ(p.satisfied.size(), 2u);
  EXPECT_EQ(p.satisfied[1], Regime::ParabolicSmallTheta);
  EXPECT_EQ(p.checks[1].slack, 0.0);
  // 1/r + theta/q** = 1/(N+2) with q = 2, q** = 10, r = 10, theta = 1.
  const auto big = classify_regime<Rational>(3, Rational(1), Rational(1, 10), Rational(1), Rational(2));
  EXPECT_EQ(big.regime, Regime::ParabolicLargeData);
  EXPECT_EQ(big.slack, 0.0);
}

TEST(Regime, SlackIsContinuousInTheta) {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> td(0.0, 1.0), rd(0.0, 0.3), md(1.0, 5.0);
  const double eps = 1e-3;
  int flips = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const int N = 1 + static_cast<int>(rng() % 3);
    const double th = td(rng), ri = rd(rng), mu = md(rng);
    if (th <= eps) continue;
    const auto base = classify_regime<double>(N, th, ri, mu);
    for (const double s : {-eps, eps}) {
      const auto moved = classify_regime<double>(N, th + s, ri, mu);
      if (moved.regime == base.regime) continue;
      ++flips;
      double nearest = std::numeric_limits<double>::infinity();
      for (const auto& c : base.checks) {
        if (c.note.empty()) nearest = std::min(nearest, std::abs(c.slack));
      }
      EXPECT_LT(nearest, eps * 1.0 + 1e-15);
    }
  }
  EXPECT_GT(flips, 0);
}

TEST(Ode, BoundExamples) {
  EXPECT_NEAR(ode_bound(1.0, 1.0, 0.0, 2.0), 0.5, 1e-15);
  EXPECT_NEAR(ode_bound(0.5, 2.0, 1.0, 1.0), std::exp(1.0), 1e-14);
  for (const double t : {1e-3, 0.1, 1.0, 7.0}) EXPECT_NEAR(ode_bound(1.0, 1.0, 0.0, t), 1.0 / t, 1e-12 / t);
}

TEST(Ode, ClosedFormSolutions) {
  OdeParams riccati;
  riccati.K = 1.0;
  riccati.a = 1.0;
  riccati.y0 = 10.0;
  const OdeSolution s = ode_integrate_at(riccati, {0.5, 1.0});
  EXPECT_NEAR(s.y.back(), 10.0 / 11.0, 1e-8);
  EXPECT_FALSE(s.blowup_time.has_value());

  OdeParams logistic;
  logistic.C = 2.0;
  logistic.K = 2.0;
  logistic.a = 1.0;
  logistic.y0 = 0.1;
  const OdeSolution l = ode_integrate_at(logistic, {1.5});
  const double exact = 1.0 / (1.0 + (1.0 / 0.1 - 1.0) * std::exp(-2.0 * 1.5));
  EXPECT_NEAR(l.y.back(), exact, 1e-8);

  OdeParams still;
  still.y0 = 3.0;
  const OdeSolution c = ode_integrate(still, 4.0);
  for (const double y : c.y) EXPECT_EQ(y, 3.0);
}

TEST(Ode, BlowupHittingTime) {
  OdeParams p;
  p.C_m = 1.0;
  p.d = 2.0;
  p.y0 = 1.0;
  const OdeSolution s = ode_integrate(p, 2.0);
  ASSERT_TRUE(s.blowup_time.has_value());
  EXPECT_NEAR(*s.blowup_time, 0.5, 1e-3);
}

TEST(Ode, BoundDominatesTheIntegrator) {
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> pd(0.1, 3.0), yd(1.0, 4.0);
  std::vector<double> times;
  for (int i = 0; i <= 40; ++i) times.push_back(1e-3 * std::pow(5000.0, i / 40.0));
  for (int trial = 0; trial < 20; ++trial) {
    OdeParams p;
    p.a = pd(rng);
    p.K = pd(rng);
    p.C = pd(rng);
    p.y0 = std::pow(10.0, yd(rng));
    const OdeSolution s = ode_integrate_at(p, times);
    ASSERT_EQ(s.y.size(), times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
      EXPECT_LE(s.y[i], ode_bound(p.a, p.K, p.C, times[i]) * (1 + 1e-6));
    }
  }
}

TEST(BlowupTime, Examples) {
  const BlowupTime bt = blowup_time(2.0, 0.0, 3, 0.5, 1.0, 1.0);
  EXPECT_NEAR(bt.b, 2.0, 1e-15);
  EXPECT_NEAR(bt.T_star, 0.5, 1e-15);
  const BlowupTime twice = blowup_time(2.0, 0.0, 3, 0.5, 2.0, 1.0);
  EXPECT_NEAR(twice.T_star, 0.25, 1e-15);
  double prev = 0.0;
  for (const double th : {0.3, 0.1, 0.01, 1e-4}) {
    const double T = blowup_time(2.0, 0.0, 3, th, 1.0, 1.3).T_star;
    EXPECT_GT(T, prev);
    prev = T;
  }
  EXPECT_GT(prev, 1e3);
  EXPECT_THROW(blowup_time(1.0, 0.0, 3, 0.5, 1.0, 1.0), RegimeError);
}

TEST(BlowupTime, MatchesTheOdeHittingTime) {
  std::mt19937_64 rng(16);
  std::uniform_real_distribution<double> md(1.0, 4.0), td(0.05, 0.6), rd(0.0, 0.2), cd(0.2, 3.0), ud(0.5, 2.0);
  int checked = 0;
  while (checked < 10) {
    const int N = 1 + static_cast<int>(rng() % 3);
    const double mu = md(rng), th = td(rng), ri = rd(rng), C = cd(rng), u0 = ud(rng);
    if (!(mu * (1 - N * ri) - N * th > 0.05)) continue;
    const BlowupTime bt = blowup_time(mu, ri, N, th, C, u0);
    // The integrator stops at a finite threshold; keep its offset below 1e-3 relative.
    if (bt.b < 0.3) continue;
    OdeParams p;
    p.C_m = C;
    p.d = bt.b;
    p.y0 = std::pow(u0, mu);
    const OdeSolution s = ode_integrate(p, 2.0 * bt.T_star);
    ASSERT_TRUE(s.blowup_time.has_value());
    EXPECT_NEAR(*s.blowup_time, bt.T_star, 0.01 * bt.T_star);
    ++checked;
  }
}

TEST(Slicing, Examples) {
  const SlicingPlan p = slicing_plan(0.5, 1.0, 1.0, 1.0, 1.0);
  EXPECT_NEAR(p.h, 0.25, 1e-15);
  EXPECT_EQ(p.slices, 4);
  const SlicingPlan none = slicing_plan(0.5, 0.0, 1.0, 1.0, 1.0);
  EXPECT_TRUE(std::isinf(none.h));
  EXPECT_EQ(none.slices, 1);
  EXPECT_NEAR(slicing_plan(0.5, 1.0, 2.0, 1.0, 1.0).h, 0.125, 1e-15);
  EXPECT_THROW(slicing_plan(0.0, 1.0, 1.0, 1.0, 1.0), std::invalid_argument);
}

TEST(Smallness, Examples) {
  const Smallness s = smallness_check(1.0, 1.0, 0.1, 0.2, 1.0);
  EXPECT_NEAR(s.threshold, 0.25, 1e-15);
  EXPECT_NEAR(s.lhs, 0.3, 1e-15);
  EXPECT_FALSE(s.satisfied);
  EXPECT_TRUE(smallness_check(0.7, 1e6, 0.0, 0.0, 1.0).satisfied);
}

TEST(DecayFit, ExactPowerLawAndConstant) {
  std::vector<double> t, y, c;
  for (int i = 1; i <= 100; ++i) {
    t.push_back(0.01 * i);
    y.push_back(std::pow(0.01 * i, -0.75));
    c.push_back(2.0);
  }
  const DecayFit f = fit_power_law(t, y, {0.05, 1.0});
  EXPECT_NEAR(f.slope, -0.75, 1e-10);
  EXPECT_NEAR(f.r_squared, 1.0, 1e-12);
  EXPECT_NEAR(fit_power_law(t, c, {0.05, 1.0}).slope, 0.0, 1e-12);
  EXPECT_THROW(fit_power_law(t, y, {0.5, 0.52}), std::invalid_argument);
}
