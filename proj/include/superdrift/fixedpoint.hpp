#ifndef SUPERDRIFT_FIXEDPOINT_HPP
#define SUPERDRIFT_FIXEDPOINT_HPP

#include "superdrift/estimates.hpp"
#include "superdrift/fv_solver.hpp"

#include <optional>
#include <string>
#include <vector>

namespace superdrift {

/// Invariant-ball radii: R = (delta (theta+1))^{-1/theta} and
/// K_delta = (1/(delta (theta+1)))^{1/theta} theta/(theta+1).
struct BallParams {
  double delta = 1.0;
  double K = 0.0;
  double theta = 1.0;
  double R = 0.0;
  double K_delta = 0.0;

  /// delta R^{theta+1} + K_delta - R, zero up to rounding.
  double identity_residual() const;
};

BallParams ball_params(double delta, double theta, double K = 0.0);

/// delta s^{theta+1} + K <= R.
bool ball_check(double delta, double K, double theta, double s);

/// Time grid of the fixed-point construction: the fixed step, or the step
/// ceiling under the adaptive policy.
std::vector<double> picard_time_grid(const ProblemSpec& problem, const SolverConfig& config);

/// F(v): the scheme with the drift evaluated at v instead of u,
/// on v's time grid. A snapshot over the cap is flagged and ends the series.
SpaceTimeSeries apply_F(const SpaceTimeSeries& v, const ProblemSpec& problem, const SolverConfig& config);

/// Series of zeros on the given time grid.
SpaceTimeSeries zero_series(const Grid& grid, const std::vector<double>& times);

/// The nonlinear scheme run on a prescribed time grid.
SpaceTimeSeries run_on_grid(const ProblemSpec& problem, const SolverConfig& config, const std::vector<double>& times);

struct PicardReport {
  double q = 0.0;
  double q_star_star = 0.0;
  std::vector<double> iterates;  ///< space-time L^{q**} norms of F(v_k)
  std::vector<double> diffs;     ///< norms of consecutive differences
  bool converged = false;
  bool diverged = false;
  int iterations = 0;
  std::string message;

  /// diffs[k+1] / diffs[k]
  std::vector<double> contraction_ratios() const;
};

struct PicardResult {
  SpaceTimeSeries u;
  PicardReport report;
};

/// v_0 = 0, v_{k+1} = F(v_k) until the relative difference drops below tol.
/// q defaults to 2(N+2)/(N+4).
PicardResult picard_iterate(const ProblemSpec& problem, const SolverConfig& config, double tol, int max_iter,
                            std::optional<double> q = std::nullopt);

/// Data sizes entering the smallness condition, on the Picard time grid:
/// |E| in L^r of the cylinder, f in L^q, u0 in L^{q** N/(N+2)}.
struct DataNorms {
  double E_r = 0.0;
  double f_q = 0.0;
  double u0 = 0.0;
};

DataNorms data_norms(const ProblemSpec& problem, const SolverConfig& config, double q, double r_inv);

/// smallness_check on data_norms; C is the assumed constant.
Smallness problem_smallness(const ProblemSpec& problem, const SolverConfig& config, double q, double r_inv,
                            double C = 1.0);

/// `k,norm_qss,diff` rows (diff empty for the first iterate).
std::string picard_to_csv(const PicardReport& report);

}  // namespace superdrift

#endif  // SUPERDRIFT_FIXEDPOINT_HPP
