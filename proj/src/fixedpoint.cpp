#include "superdrift/fixedpoint.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace superdrift {

double BallParams::identity_residual() const { return delta * std::pow(R, theta + 1.0) + K_delta - R; }

BallParams ball_params(double delta, double theta, double K) {
  if (!(delta > 0.0) || !(theta > 0.0)) throw std::invalid_argument("ball parameters need delta > 0 and theta > 0");
  if (K < 0.0) throw std::invalid_argument("ball parameters need K >= 0");
  BallParams b;
  b.delta = delta;
  b.theta = theta;
  b.K = K;
  b.R = std::pow(delta * (theta + 1.0), -1.0 / theta);
  b.K_delta = std::pow(1.0 / (delta * (theta + 1.0)), 1.0 / theta) * theta / (theta + 1.0);
  return b;
}

bool ball_check(double delta, double K, double theta, double s) {
  if (s < 0.0) throw std::invalid_argument("ball check needs s >= 0");
  const BallParams b = ball_params(delta, theta, K);
  return delta * std::pow(s, theta + 1.0) + K <= b.R;
}

std::vector<double> picard_time_grid(const ProblemSpec& problem, const SolverConfig& config) {
  const double T = problem.horizon;
  const double dt = config.dt_policy == DtPolicy::Fixed ? config.dt : config.dt_ceiling(T);
  if (!(dt > 0.0)) throw std::invalid_argument("time step must be positive");
  std::vector<double> times{0.0};
  while (times.back() < T) {
    const double next = times.back() + dt;
    times.push_back(next >= T * (1.0 - 1e-12) ? T : next);
  }
  return times;
}

SpaceTimeSeries zero_series(const Grid& grid, const std::vector<double>& times) {
  SpaceTimeSeries s;
  for (const double t : times) s.push_back(t, Field(grid));
  return s;
}

namespace {

template <typename DriftArg>
SpaceTimeSeries march(const ProblemSpec& problem, const SolverConfig& config, const std::vector<double>& times,
                      DriftArg&& drift_arg) {
  validate(problem);
  const Stepper stepper(problem, config);
  SpaceTimeSeries out;
  Field u = initial_datum(problem);
  out.push_back(0.0, u);
  for (std::size_t k = 0; k + 1 < times.size(); ++k) {
    const Field w = drift_arg(k, u);
    stepper.advance(u, w, times[k], times[k + 1] - times[k], static_cast<long>(k));
    if (!u.all_finite() || u.values().cwiseAbs().maxCoeff() > config.cap_linf) {
      u.mark_blown_up();
      out.push_back(times[k + 1], u);
      break;
    }
    out.push_back(times[k + 1], u);
  }
  return out;
}

SpaceTimeSeries difference(const SpaceTimeSeries& a, const SpaceTimeSeries& b) {
  SpaceTimeSeries d;
  for (std::size_t j = 0; j < a.size(); ++j) {
    d.push_back(a.times()[j], Field(a.grid(), a[j].values() - b[j].values()));
  }
  return d;
}

bool any_blown_up(const SpaceTimeSeries& s) {
  for (const auto& f : s.snapshots()) {
    if (f.blown_up()) return true;
  }
  return false;
}

}  // namespace

SpaceTimeSeries apply_F(const SpaceTimeSeries& v, const ProblemSpec& problem, const SolverConfig& config) {
  if (v.empty()) throw std::invalid_argument("apply_F needs a non-empty series");
  if (v.grid() != problem.grid) throw std::invalid_argument("apply_F: series grid differs from the problem grid");
  if (std::abs(v.final_time() - problem.horizon) > 1e-12 * problem.horizon) {
    throw std::invalid_argument("apply_F: series does not span the horizon");
  }
  return march(problem, config, v.times(), [&v](std::size_t k, const Field&) -> Field {
    if (v[k].blown_up()) throw std::domain_error("apply_F: blown-up argument");
    return v[k];
  });
}

SpaceTimeSeries run_on_grid(const ProblemSpec& problem, const SolverConfig& config, const std::vector<double>& times) {
  return march(problem, config, times, [](std::size_t, const Field& u) { return u; });
}

std::vector<double> PicardReport::contraction_ratios() const {
  std::vector<double> r;
  for (std::size_t k = 1; k < diffs.size(); ++k) r.push_back(diffs[k - 1] > 0.0 ? diffs[k] / diffs[k - 1] : 0.0);
  return r;
}

PicardResult picard_iterate(const ProblemSpec& problem, const SolverConfig& config, double tol, int max_iter,
                            std::optional<double> q) {
  if (!(tol > 0.0)) throw std::invalid_argument("Picard tolerance must be positive");
  if (max_iter < 2) throw std::invalid_argument("Picard needs at least two iterations");
  if (!(problem.nonlinearity.theta > 0.0)) throw std::invalid_argument("Picard iteration needs theta > 0");
  const int N = problem.grid.dim();
  PicardResult result;
  auto& rep = result.report;
  rep.q = q ? *q : sigma_prime<double>(N);
  rep.q_star_star = q_star_star(N, rep.q);
  if (!(2.0 * rep.q < N + 2.0) || rep.q < 1.0) throw std::invalid_argument("Picard exponent q must lie in [1, (N+2)/2)");
  const double p = rep.q_star_star;

  const std::vector<double> times = picard_time_grid(problem, config);
  SpaceTimeSeries v = zero_series(problem.grid, times);
  for (int k = 1; k <= max_iter; ++k) {
    SpaceTimeSeries next = apply_F(v, problem, config);
    rep.iterations = k;
    if (any_blown_up(next) || next.size() != v.size()) {
      rep.diverged = true;
      rep.message = "iterate exceeded the sup-norm cap";
      result.u = std::move(next);
      return result;
    }
    const double norm = spacetime_lp_norm(next, p);
    rep.iterates.push_back(norm);
    if (!std::isfinite(norm) || norm > 1e8) {
      rep.diverged = true;
      rep.message = "iterate norm exceeded 1e8";
      result.u = std::move(next);
      return result;
    }
    if (k > 1) {
      const double diff = spacetime_lp_norm(difference(next, v), p);
      rep.diffs.push_back(diff);
      if (diff <= tol * norm) {
        rep.converged = true;
        result.u = std::move(next);
        return result;
      }
    }
    v = std::move(next);
  }
  rep.message = "no convergence within the iteration limit";
  result.u = std::move(v);
  return result;
}

DataNorms data_norms(const ProblemSpec& problem, const SolverConfig& config, double q, double r_inv) {
  const Grid& grid = problem.grid;
  const int N = grid.dim();
  const std::vector<double> times = picard_time_grid(problem, config);
  SpaceTimeSeries E_abs, f_abs;
  for (const double t : times) {
    E_abs.push_back(t, Field(grid, problem.coefficients.E.sample(grid, t).rowwise().norm()));
    f_abs.push_back(t, Field(grid, problem.coefficients.f.sample(grid, t).cwiseAbs()));
  }
  DataNorms out;
  if (r_inv > 0.0) {
    out.E_r = spacetime_lp_norm(E_abs, 1.0 / r_inv);
  } else {
    for (const auto& e : E_abs.snapshots()) out.E_r = std::max(out.E_r, linf_norm(e));
  }
  out.f_q = spacetime_lp_norm(f_abs, q);
  out.u0 = lp_norm(initial_datum(problem), q_star_star(N, q) * N / (N + 2.0));
  return out;
}

Smallness problem_smallness(const ProblemSpec& problem, const SolverConfig& config, double q, double r_inv, double C) {
  const DataNorms d = data_norms(problem, config, q, r_inv);
  return smallness_check(problem.nonlinearity.theta, d.E_r, d.f_q, d.u0, C);
}

std::string picard_to_csv(const PicardReport& report) {
  std::ostringstream out;
  out << std::setprecision(17) << "k,norm_qss,diff\n";
  for (std::size_t k = 0; k < report.iterates.size(); ++k) {
    out << k + 1 << ',' << report.iterates[k] << ',';
    if (k > 0 && k - 1 < report.diffs.size()) out << report.diffs[k - 1];
    out << '\n';
  }
  return out.str();
}

}  // namespace superdrift
