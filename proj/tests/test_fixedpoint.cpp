#include "superdrift/fixedpoint.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace superdrift;

namespace {

SolverConfig fixed_dt(double dt) {
  SolverConfig c;
  c.dt_policy = DtPolicy::Fixed;
  c.dt = dt;
  return c;
}

SpaceTimeSeries scaled_bumps(const ProblemSpec& p, const std::vector<double>& times, double amp, double shift) {
  SpaceTimeSeries s;
  const Grid& g = p.grid;
  for (const double t : times) {
    s.push_back(t, Field::from_function(g, [&](const Grid::Point& x) {
                  return amp * (1.0 + t) * std::sin(M_PI * x[0]) * std::cos(shift * x[1]);
                }));
  }
  return s;
}

}  // namespace

TEST(Ball, Examples) {
  const BallParams b = ball_params(1.0, 1.0);
  EXPECT_NEAR(b.R, 0.5, 1e-15);
  EXPECT_NEAR(b.K_delta, 0.25, 1e-15);
  EXPECT_TRUE(ball_check(1.0, 0.2, 1.0, 0.5));
  EXPECT_FALSE(ball_check(1.0, 0.3, 1.0, 0.5));
  EXPECT_THROW(ball_params(0.0, 1.0), std::invalid_argument);
}

TEST(Ball, IdentityAndMonotonicity) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> dd(0.01, 10.0), td(0.05, 3.0), sd(0.0, 2.0);
  for (int i = 0; i < 200; ++i) {
    const double delta = dd(rng), theta = td(rng);
    const BallParams b = ball_params(delta, theta);
    EXPECT_NEAR(b.identity_residual(), 0.0, 1e-12 * std::max(1.0, b.R));
    const double s = sd(rng) * b.R, K = sd(rng) * b.K_delta;
    if (ball_check(delta, K, theta, s)) {
      EXPECT_TRUE(ball_check(delta, 0.5 * K, theta, s));
      EXPECT_TRUE(ball_check(delta, K, theta, 0.5 * s));
    }
  }
}

TEST(PicardGrid, CoversTheHorizon) {
  const ProblemSpec p = make_problem("heat", 1, 8, 0.1);
  const auto t = picard_time_grid(p, fixed_dt(0.03));
  ASSERT_EQ(t.size(), 5u);
  EXPECT_EQ(t.front(), 0.0);
  EXPECT_EQ(t.back(), 0.1);
  EXPECT_EQ(picard_time_grid(p, SolverConfig{}).size(), 201u);
}

TEST(FrozenMap, ZeroArgumentIsTheDriftFreeProblem) {
  ProblemConfig cfg;
  cfg.preset = "power-drift";
  cfg.dim = 2;
  cfg.cells = {16, 16};
  cfg.horizon = 0.02;
  cfg.mass = 3.0;
  const ProblemSpec p = make_problem(cfg);
  const SolverConfig sc = fixed_dt(1e-3);
  const auto times = picard_time_grid(p, sc);
  const SpaceTimeSeries F0 = apply_F(zero_series(p.grid, times), p, sc);

  ProblemSpec heat = p;
  heat.coefficients.E = VectorCoefficient::zero();
  const SpaceTimeSeries h = run_on_grid(heat, sc, times);
  ASSERT_EQ(F0.size(), h.size());
  for (std::size_t j = 0; j < h.size(); ++j) EXPECT_TRUE(F0[j].values().isApprox(h[j].values(), 1e-12));
}

TEST(FrozenMap, DriftFreeProblemIgnoresTheArgument) {
  const ProblemSpec p = make_problem("heat", 2, 12, 0.01);
  const SolverConfig sc = fixed_dt(1e-3);
  const auto times = picard_time_grid(p, sc);
  const SpaceTimeSeries a = apply_F(zero_series(p.grid, times), p, sc);
  const SpaceTimeSeries b = apply_F(scaled_bumps(p, times, 5.0, 2.0), p, sc);
  for (std::size_t j = 0; j < a.size(); ++j) EXPECT_EQ(a[j].values(), b[j].values());
}

TEST(FrozenMap, AffineInTheArgumentForLinearDrift) {
  ProblemConfig cfg;
  cfg.preset = "power-drift";
  cfg.dim = 2;
  cfg.cells = {16, 16};
  cfg.theta = 0.0;
  cfg.reg_n = std::nullopt;
  cfg.horizon = 0.01;
  cfg.E_form = "constant:1,0.5";
  const ProblemSpec p = make_problem(cfg);
  SolverConfig sc = fixed_dt(1e-3);
  sc.lin_tol = 1e-14;
  const auto times = picard_time_grid(p, sc);
  const SpaceTimeSeries v1 = scaled_bumps(p, times, 1.0, 1.0), v2 = scaled_bumps(p, times, -0.5, 3.0);
  SpaceTimeSeries sum;
  for (std::size_t j = 0; j < times.size(); ++j) sum.push_back(times[j], Field(p.grid, v1[j].values() + v2[j].values()));
  const SpaceTimeSeries F0 = apply_F(zero_series(p.grid, times), p, sc);
  const SpaceTimeSeries F1 = apply_F(v1, p, sc), F2 = apply_F(v2, p, sc), F12 = apply_F(sum, p, sc);
  for (std::size_t j = 0; j < times.size(); ++j) {
    const Eigen::VectorXd lhs = F12[j].values() - F0[j].values();
    const Eigen::VectorXd rhs = (F1[j].values() - F0[j].values()) + (F2[j].values() - F0[j].values());
    EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-9 * std::max(1.0, rhs.cwiseAbs().maxCoeff()));
  }
}

TEST(Picard, DriftFreeConvergesInTwoIterations) {
  const ProblemSpec p = make_problem("heat", 2, 12, 0.02);
  const PicardResult r = picard_iterate(p, fixed_dt(2e-3), 1e-10, 20);
  EXPECT_TRUE(r.report.converged);
  EXPECT_EQ(r.report.iterations, 2);
  ASSERT_EQ(r.report.diffs.size(), 1u);
  EXPECT_EQ(r.report.diffs[0], 0.0);
  EXPECT_NEAR(r.report.q, 8.0 / 6.0, 1e-15);
}

TEST(Picard, SmallDataContracts) {
  ProblemConfig cfg;
  cfg.preset = "power-drift";
  cfg.dim = 2;
  cfg.cells = {16, 16};
  cfg.horizon = 0.05;
  cfg.mass = 0.05;
  cfg.E_form = "constant:0.5,0.5";
  const ProblemSpec p = make_problem(cfg);
  const PicardResult r = picard_iterate(p, fixed_dt(1e-3), 1e-10, 30);
  EXPECT_TRUE(r.report.converged);
  for (const double ratio : r.report.contraction_ratios()) EXPECT_LT(ratio, 1.0);
  const std::string csv = picard_to_csv(r.report);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "k,norm_qss,diff");
}

TEST(Picard, LargeDataFailsToConverge) {
  ProblemConfig cfg;
  cfg.preset = "power-drift";
  cfg.dim = 2;
  cfg.cells = {16, 16};
  cfg.horizon = 0.05;
  cfg.mass = 200.0;
  cfg.E_form = "identity";
  const ProblemSpec p = make_problem(cfg);
  SolverConfig sc = fixed_dt(1e-3);
  sc.cap_linf = 1e6;
  const PicardResult r = picard_iterate(p, sc, 1e-10, 20);
  EXPECT_FALSE(r.report.converged);
  EXPECT_FALSE(r.report.message.empty());
}

TEST(Smallness, DataNorms) {
  ProblemConfig cfg;
  cfg.dim = 1;
  cfg.cells = {10};
  cfg.preset = "power-drift";
  cfg.E_form = "constant:2";
  cfg.f_form = "constant:3";
  cfg.u0_form = "constant:0.5";
  cfg.horizon = 0.5;
  const ProblemSpec p = make_problem(cfg);
  const SolverConfig sc = fixed_dt(0.05);
  const DataNorms d = data_norms(p, sc, 1.0, 0.0);
  EXPECT_NEAR(d.E_r, 2.0, 1e-15);
  EXPECT_NEAR(d.f_q, 3.0 * 0.5, 1e-12);
  EXPECT_NEAR(d.u0, 0.5, 1e-12);
  const Smallness s = problem_smallness(p, sc, 1.0, 0.0);
  EXPECT_NEAR(s.lhs, std::pow(2.0, 1.0) * (1.5 + 0.5), 1e-12);
  EXPECT_FALSE(s.satisfied);
}
