#include "superdrift/fv_solver.hpp"

#include <Eigen/IterativeLinearSolvers>

#include <cmath>
#include <limits>
#include <sstream>

namespace superdrift {

namespace {

double harmonic_mean(double a, double b) { return 2.0 * a * b / (a + b); }

// Calls visit(i, j, axis) for every interior face between cell i and its
// upper neighbour j, and visit_boundary(i, axis, side) for boundary faces
// (side -1 lower, +1 upper).
template <typename Interior, typename Boundary>
void for_each_face(const Grid& grid, Interior&& visit, Boundary&& visit_boundary) {
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Grid::Index idx = grid.multi_index(i);
    for (int a = 0; a < grid.dim(); ++a) {
      if (idx[a] == 0) visit_boundary(i, a, -1);
      if (idx[a] + 1 < grid.cells(a)) {
        visit(i, i + grid.stride(a), a);
      } else {
        visit_boundary(i, a, +1);
      }
    }
  }
}

Eigen::VectorXd truncated(Eigen::VectorXd v, const std::optional<double>& n) {
  if (n) v = v.cwiseMax(-*n).cwiseMin(*n);
  return v;
}

}  // namespace

DiffusionOperator assemble_diffusion(const Grid& grid, const Eigen::MatrixXd& M) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  if (M.rows() != n || M.cols() != grid.dim()) throw std::invalid_argument("diffusivity shape does not match grid");
  if (!(M.minCoeff() > 0.0)) throw ModelError("diffusivity must be positive");

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(n) * (2 * grid.dim() + 1));
  for_each_face(
      grid,
      [&](std::size_t i, std::size_t j, int a) {
        const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
        const double k = grid.face_area(a) / grid.spacing(a) * harmonic_mean(M(ii, a), M(jj, a));
        triplets.emplace_back(ii, ii, k);
        triplets.emplace_back(jj, jj, k);
        triplets.emplace_back(ii, jj, -k);
        triplets.emplace_back(jj, ii, -k);
      },
      [&](std::size_t i, int a, int) {
        const auto ii = static_cast<Eigen::Index>(i);
        triplets.emplace_back(ii, ii, grid.face_area(a) * M(ii, a) / (0.5 * grid.spacing(a)));
      });

  DiffusionOperator op;
  op.grid = grid;
  op.A.resize(n, n);
  op.A.setFromTriplets(triplets.begin(), triplets.end());
  op.A.makeCompressed();
  return op;
}

Field drift_divergence(const Grid& grid, const Eigen::MatrixXd& E, const Field& u, const Nonlinearity& nl) {
  Field out(grid);
  if (E.size() == 0 || E.isZero(0.0)) return out;
  const auto n = static_cast<Eigen::Index>(grid.size());
  Eigen::VectorXd g(n);
  for (Eigen::Index i = 0; i < n; ++i) g[i] = nl(u.values()[i]);

  const double vol = grid.cell_volume();
  Eigen::VectorXd& d = out.values();
  for_each_face(
      grid,
      [&](std::size_t i, std::size_t j, int a) {
        const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
        const double w = -0.5 * (E(ii, a) + E(jj, a));  // velocity along +axis
        const double up = w > 0.0 ? g[ii] : (w < 0.0 ? g[jj] : 0.5 * (g[ii] + g[jj]));
        const double flux = w * up * grid.face_area(a) / vol;
        d[ii] += flux;
        d[jj] -= flux;
      },
      [&](std::size_t i, int a, int side) {
        const auto ii = static_cast<Eigen::Index>(i);
        const double outward = -E(ii, a) * side;
        if (outward > 0.0) d[ii] += outward * g[ii] * grid.face_area(a) / vol;
      });
  return out;
}

double max_outflow_rate(const Grid& grid, const Eigen::MatrixXd& E) {
  if (E.size() == 0 || E.isZero(0.0)) return 0.0;
  const double vol = grid.cell_volume();
  Eigen::VectorXd rate = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size()));
  for_each_face(
      grid,
      [&](std::size_t i, std::size_t j, int a) {
        const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
        const double w = -0.5 * (E(ii, a) + E(jj, a));
        if (w > 0.0) rate[ii] += w * grid.face_area(a) / vol;
        if (w < 0.0) rate[jj] -= w * grid.face_area(a) / vol;
      },
      [&](std::size_t i, int a, int side) {
        const auto ii = static_cast<Eigen::Index>(i);
        const double outward = -E(ii, a) * side;
        if (outward > 0.0) rate[ii] += outward * grid.face_area(a) / vol;
      });
  return rate.maxCoeff();
}

double cfl_dt(const Field& u, const Eigen::MatrixXd& E, const Nonlinearity& nl, const Grid& grid, double safety,
              double dt_cap) {
  const double rate = max_outflow_rate(grid, E);
  const double sup = u.values().cwiseAbs().maxCoeff();
  if (rate == 0.0 || sup == 0.0) return dt_cap;
  const double lip = nl.lipschitz_bound(sup);
  if (lip == 0.0) return dt_cap;
  return safety / (lip * rate);
}

void SolverConfig::validate() const {
  if (dt_policy == DtPolicy::Fixed && !(dt > 0.0)) throw std::invalid_argument("fixed time step must be positive");
  if (!(safety > 0.0 && safety <= 1.0)) throw std::invalid_argument("CFL safety factor must lie in (0, 1]");
  if (dt_max < 0.0) throw std::invalid_argument("dt_max must be non-negative");
  if (!(lin_tol > 0.0 && lin_tol <= 1e-6)) throw std::invalid_argument("linear tolerance must lie in (0, 1e-6]");
  if (!(cap_linf > 0.0)) throw std::invalid_argument("blow-up cap must be positive");
  if (growth_cap < 0.0) throw std::invalid_argument("growth cap must be non-negative");
  if (!(dt_min > 0.0)) throw std::invalid_argument("dt_min must be positive");
  if (stride < 1) throw std::invalid_argument("snapshot stride must be at least 1");
  if (!(norm_m >= 1.0)) throw std::invalid_argument("norm exponent must be >= 1");
  if (max_steps < 1) throw std::invalid_argument("max_steps must be positive");
}

std::string to_string(RunStatus status) {
  switch (status) {
    case RunStatus::Completed:
      return "completed";
    case RunStatus::BlowUpSuspected:
      return "blow-up-suspected";
    case RunStatus::SolverFailure:
      return "solver-failure";
  }
  return "unknown";
}

Stepper::Stepper(const ProblemSpec& problem, const SolverConfig& config)
    : problem_(problem), config_(config), op_(assemble_diffusion(problem.grid, problem.coefficients.M)) {
  config_.validate();
  const auto& c = problem_.coefficients;
  if (!c.E.time_dependent) E_frozen_ = c.E.sample(problem_.grid, 0.0);
  if (!c.f.time_dependent) f_frozen_ = truncated(c.f.sample(problem_.grid, 0.0), problem_.nonlinearity.reg_n);
}

Eigen::MatrixXd Stepper::drift_at(double t) const {
  if (!problem_.coefficients.E.time_dependent) return E_frozen_;
  return problem_.coefficients.E.sample(problem_.grid, t);
}

Eigen::VectorXd Stepper::source_at(double t) const {
  if (!problem_.coefficients.f.time_dependent) return f_frozen_;
  return truncated(problem_.coefficients.f.sample(problem_.grid, t), problem_.nonlinearity.reg_n);
}

double Stepper::cfl(const Field& u, double t) const {
  return cfl_dt(u, drift_at(t), problem_.nonlinearity, problem_.grid, config_.safety,
                config_.dt_ceiling(problem_.horizon));
}

StepReport Stepper::advance(Field& u, double t, double dt, long step_index) const {
  return advance(u, u, t, dt, step_index);
}

StepReport Stepper::advance(Field& u, const Field& drift_argument, double t, double dt, long step_index) const {
  if (!(dt > 0.0)) throw SolverError("time step must be positive", step_index);
  const Grid& grid = problem_.grid;
  const double vol = grid.cell_volume();

  Eigen::VectorXd rhs = u.values() + dt * source_at(t + dt);
  if (!problem_.coefficients.E.is_zero()) {
    rhs -= dt * drift_divergence(grid, drift_at(t), drift_argument, problem_.nonlinearity).values();
  }

  StepReport report;
  report.t = t + dt;
  report.dt = dt;
  report.rhs_l1 = rhs.cwiseAbs().sum() * vol;
  rhs *= vol;

  Eigen::SparseMatrix<double> S = op_.A * dt;
  S.diagonal().array() += vol;

  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
  cg.setTolerance(config_.lin_tol);
  cg.setMaxIterations(std::max<Eigen::Index>(1000, 10 * S.rows()));
  cg.compute(S);
  Eigen::VectorXd next = cg.solveWithGuess(rhs, u.values());
  if (cg.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "conjugate gradient did not converge at step " << step_index << " after " << cg.iterations()
        << " iterations (residual " << cg.error() << ")";
    throw SolverError(msg.str(), step_index);
  }
  report.lin_iters = static_cast<int>(cg.iterations());
  report.lin_residual = cg.error();
  u.values() = std::move(next);
  return report;
}

std::pair<Field, StepReport> step(const Field& u, double dt, const ProblemSpec& problem, const SolverConfig& config,
                                  double t) {
  const Stepper stepper(problem, config);
  Field next = u;
  StepReport report = stepper.advance(next, t, dt);
  report.cfl_dt = stepper.cfl(u, t);
  const double sup = next.values().cwiseAbs().maxCoeff();
  if (!next.all_finite() || sup > config.cap_linf) {
    next.mark_blown_up();
    report.blown_up = true;
  }
  return {std::move(next), report};
}

Field initial_datum(const ProblemSpec& problem) {
  const Field& u0 = problem.coefficients.u0;
  return Field(u0.grid(), truncated(u0.values(), problem.nonlinearity.reg_n));
}

namespace {

NormRecord measure_raw(const Field& u, double t, double m) {
  if (u.all_finite()) return measure(u, t, m);
  NormRecord r;
  r.t = t;
  const double inf = std::numeric_limits<double>::infinity();
  r.L1 = r.L2 = r.Lm = r.Linf = r.boundary_linf = inf;
  return r;
}

}  // namespace

Trajectory run(const ProblemSpec& problem, const SolverConfig& config) {
  validate(problem);
  const Stepper stepper(problem, config);
  const double T = problem.horizon;
  const double ceiling = config.dt_ceiling(T);

  Trajectory traj;
  traj.norms.m = config.norm_m;
  Field u = initial_datum(problem);
  traj.norms.records.push_back(measure(u, 0.0, config.norm_m));
  traj.series.push_back(0.0, u);
  const double sup0 = linf_norm(u);

  double t = 0.0;
  long k = 0;
  bool snapshot_pending = false;
  while (t < T) {
    if (k >= config.max_steps) {
      traj.status = RunStatus::SolverFailure;
      traj.message = "step limit reached before the horizon";
      break;
    }
    const double cfl = stepper.cfl(u, t);
    double dt = config.dt_policy == DtPolicy::Fixed ? config.dt : std::min(cfl, ceiling);
    if (config.dt_policy == DtPolicy::Adaptive && cfl < config.dt_min) {
      traj.status = RunStatus::BlowUpSuspected;
      std::ostringstream msg;
      msg << "CFL step " << cfl << " fell below dt_min at t = " << t;
      traj.message = msg.str();
      break;
    }
    bool last = false;
    if (t + dt >= T * (1.0 - 1e-12)) {
      dt = T - t;
      last = true;
    }

    StepReport report;
    try {
      report = stepper.advance(u, t, dt, k);
    } catch (const SolverError& e) {
      traj.status = RunStatus::SolverFailure;
      traj.message = e.what();
      break;
    }
    report.cfl_dt = cfl;
    t = last ? T : t + dt;
    report.t = t;
    ++k;

    NormRecord rec = measure_raw(u, t, config.norm_m);
    rec.dt = dt;
    rec.lin_iters = report.lin_iters;
    const bool over_cap = !(rec.Linf <= config.cap_linf);
    const bool over_growth = config.growth_cap > 0.0 && rec.Linf > config.growth_cap * sup0;
    if (over_cap || over_growth) {
      u.mark_blown_up();
      report.blown_up = true;
    }
    traj.norms.records.push_back(rec);
    traj.steps.push_back(report);

    if (report.blown_up) {
      traj.series.push_back(t, u);
      traj.status = RunStatus::BlowUpSuspected;
      std::ostringstream msg;
      msg << (over_cap ? "sup norm exceeded the cap" : "sup norm grew past the growth cap") << " at t = " << t;
      traj.message = msg.str();
      snapshot_pending = false;
      break;
    }
    if (config.keep_snapshots && k % config.stride == 0) {
      traj.series.push_back(t, u);
      snapshot_pending = false;
    } else {
      snapshot_pending = true;
    }
  }
  if (snapshot_pending) traj.series.push_back(t, u);
  return traj;
}

double drift_flux_l2(const Trajectory& trajectory, const ProblemSpec& problem) {
  const auto& series = trajectory.series;
  const Grid& grid = problem.grid;
  double total = 0.0;
  for (std::size_t j = 1; j < series.size(); ++j) {
    if (series[j].blown_up()) continue;
    const Eigen::MatrixXd E = problem.coefficients.E.sample(grid, series.times()[j - 1]);
    double s = 0.0;
    for (Eigen::Index i = 0; i < E.rows(); ++i) {
      const double g = problem.nonlinearity(series[j].values()[i]);
      s += E.row(i).squaredNorm() * g * g;
    }
    total += series.weight(j) * s * grid.cell_volume();
  }
  return std::sqrt(total);
}

}  // namespace superdrift
