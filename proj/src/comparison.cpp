#include "superdrift/comparison.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

namespace superdrift {

namespace {

void require_compatible(const ProblemSpec& v, const ProblemSpec& w) {
  if (v.grid != w.grid) throw std::invalid_argument("paired problems must share the grid");
  if (v.horizon != w.horizon) throw std::invalid_argument("paired problems must share the horizon");
  if (v.coefficients.M != w.coefficients.M) throw std::invalid_argument("paired problems must share M");
  const auto& ev = v.coefficients.E;
  const auto& ew = w.coefficients.E;
  if (ev.name != ew.name || ev.time_dependent != ew.time_dependent ||
      ev.sample(v.grid, 0.0) != ew.sample(w.grid, 0.0)) {
    throw std::invalid_argument("paired problems must share E");
  }
  const auto& nv = v.nonlinearity;
  const auto& nw = w.nonlinearity;
  if (nv.theta != nw.theta || nv.reg_n != nw.reg_n || nv.form != nw.form) {
    throw std::invalid_argument("paired problems must share the nonlinearity");
  }
}

Eigen::VectorXd truncated_source(const ProblemSpec& problem, double t) {
  Eigen::VectorXd f = problem.coefficients.f.sample(problem.grid, t);
  if (const auto& n = problem.nonlinearity.reg_n) f = f.cwiseMax(-*n).cwiseMin(*n);
  return f;
}

void record(Trajectory& traj, const Field& u, const StepReport& report, double m) {
  NormRecord rec = u.all_finite() ? measure(u, report.t, m) : NormRecord{};
  rec.t = report.t;
  rec.dt = report.dt;
  rec.lin_iters = report.lin_iters;
  traj.norms.records.push_back(rec);
  traj.steps.push_back(report);
  traj.series.push_back(report.t, u);
}

}  // namespace

PairedRun paired_run(const ProblemSpec& problem_v, const ProblemSpec& problem_w, const SolverConfig& config) {
  validate(problem_v);
  validate(problem_w);
  require_compatible(problem_v, problem_w);
  const Stepper sv(problem_v, config);
  const Stepper sw(problem_w, config);
  const double T = problem_v.horizon;
  const double ceiling = config.dt_ceiling(T);

  PairedRun out;
  Field v = initial_datum(problem_v);
  Field w = initial_datum(problem_w);
  for (auto* pair : {&out.v, &out.w}) pair->norms.m = config.norm_m;
  out.v.norms.records.push_back(measure(v, 0.0, config.norm_m));
  out.w.norms.records.push_back(measure(w, 0.0, config.norm_m));
  out.v.series.push_back(0.0, v);
  out.w.series.push_back(0.0, w);

  double t = 0.0;
  long k = 0;
  while (t < T) {
    if (k >= config.max_steps) {
      out.v.status = out.w.status = RunStatus::SolverFailure;
      out.v.message = out.w.message = "step limit reached before the horizon";
      break;
    }
    const double cfl = std::min(sv.cfl(v, t), sw.cfl(w, t));
    double dt = config.dt_policy == DtPolicy::Fixed ? config.dt : std::min(cfl, ceiling);
    if (config.dt_policy == DtPolicy::Adaptive && cfl < config.dt_min) {
      out.v.status = out.w.status = RunStatus::BlowUpSuspected;
      out.v.message = out.w.message = "CFL step fell below dt_min";
      break;
    }
    bool last = false;
    if (t + dt >= T * (1.0 - 1e-12)) {
      dt = T - t;
      last = true;
    }
    StepReport rv, rw;
    try {
      rv = sv.advance(v, t, dt, k);
      rw = sw.advance(w, t, dt, k);
    } catch (const SolverError& e) {
      out.v.status = out.w.status = RunStatus::SolverFailure;
      out.v.message = out.w.message = e.what();
      break;
    }
    t = last ? T : t + dt;
    ++k;
    rv.t = rw.t = t;
    rv.cfl_dt = rw.cfl_dt = cfl;
    const bool blown = !v.all_finite() || !w.all_finite() || v.values().cwiseAbs().maxCoeff() > config.cap_linf ||
                       w.values().cwiseAbs().maxCoeff() > config.cap_linf;
    if (blown) {
      v.mark_blown_up();
      w.mark_blown_up();
      rv.blown_up = rw.blown_up = true;
    }
    record(out.v, v, rv, config.norm_m);
    record(out.w, w, rw, config.norm_m);
    if (blown) {
      out.v.status = out.w.status = RunStatus::BlowUpSuspected;
      out.v.message = out.w.message = "sup norm exceeded the cap";
      break;
    }
  }
  return out;
}

PairedRunReport contraction_gap(const PairedRun& runs, const ProblemSpec& problem_v, const ProblemSpec& problem_w,
                                double lin_tol) {
  const auto& sv = runs.v.series;
  const auto& sw = runs.w.series;
  if (sv.size() != sw.size() || sv.times() != sw.times()) throw std::invalid_argument("paired trajectories are not aligned");
  if (sv.empty()) throw std::invalid_argument("empty trajectories");
  const Grid& grid = sv.grid();
  const double vol = grid.cell_volume();

  PairedRunReport rep;
  const Eigen::VectorXd& v0 = sv[0].values();
  const Eigen::VectorXd& w0 = sw[0].values();
  const double initial_excess = (v0 - w0).cwiseMax(0.0).sum() * vol;
  rep.tolerance = 1e-8 * (v0.cwiseAbs().sum() + w0.cwiseAbs().sum()) * vol;

  const bool has_sources = !problem_v.coefficients.f.is_zero() || !problem_w.coefficients.f.is_zero();
  rep.order_applicable = (v0.array() >= w0.array()).all();
  double source_term = 0.0;
  double scale = std::max(v0.cwiseAbs().maxCoeff(), w0.cwiseAbs().maxCoeff());
  for (std::size_t j = 0; j < sv.size(); ++j) {
    if (sv[j].blown_up() || sw[j].blown_up()) break;
    const Eigen::VectorXd& v = sv[j].values();
    const Eigen::VectorXd& w = sw[j].values();
    const double t = sv.times()[j];
    if (j > 0) {
      const double dt = t - sv.times()[j - 1];
      if (has_sources) {
        const Eigen::VectorXd df = truncated_source(problem_v, t) - truncated_source(problem_w, t);
        if ((df.array() < 0.0).any()) rep.order_applicable = false;
        double s = 0.0;
        for (Eigen::Index i = 0; i < v.size(); ++i) {
          if (v[i] > w[i]) s += df[i];
        }
        source_term += dt * s * vol;
      }
      if (j - 1 < runs.v.steps.size()) rep.tolerance += lin_tol * runs.v.steps[j - 1].rhs_l1;
      if (j - 1 < runs.w.steps.size()) rep.tolerance += lin_tol * runs.w.steps[j - 1].rhs_l1;
    }
    const double lhs = (v - w).cwiseMax(0.0).sum() * vol;
    const double rhs = source_term + initial_excess;
    rep.t.push_back(t);
    rep.lhs.push_back(lhs);
    rep.rhs.push_back(rhs);
    rep.gap.push_back(lhs - rhs);
    rep.max_gap = j == 0 ? lhs - rhs : std::max(rep.max_gap, lhs - rhs);
    const double order_gap = (v - w).minCoeff();
    rep.min_order_gap = j == 0 ? order_gap : std::min(rep.min_order_gap, order_gap);
    scale = std::max({scale, v.cwiseAbs().maxCoeff(), w.cwiseAbs().maxCoeff()});
  }
  rep.contraction_ok = rep.max_gap <= rep.tolerance;
  if (rep.order_applicable) rep.ordered_ok = rep.min_order_gap >= -1e-9 * std::max(scale, 1e-300);
  return rep;
}

std::string gap_to_csv(const PairedRunReport& report) {
  std::ostringstream out;
  out << std::setprecision(17) << "t,lhs,rhs,gap\n";
  for (std::size_t i = 0; i < report.t.size(); ++i) {
    out << report.t[i] << ',' << report.lhs[i] << ',' << report.rhs[i] << ',' << report.gap[i] << '\n';
  }
  return out.str();
}

}  // namespace superdrift
