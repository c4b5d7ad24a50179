// Acceptance run: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset.

#include "superdrift/comparison.hpp"
#include "superdrift/diagnostics.hpp"
#include "superdrift/estimates.hpp"
#include "superdrift/fixedpoint.hpp"
#include "superdrift/fv_solver.hpp"
#include "superdrift/rational.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace superdrift;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

// ---------------------------------------------------------------------------
// Randomized drift-diffusion scenarios shared by criteria 1, 9 and 10.

struct Scenario {
  ProblemConfig config;
  bool source = false;
};

std::vector<Scenario> mass_scenarios() {
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double thetas[] = {0.25, 0.5, 1.0};
  const int cells[] = {0, 256, 64, 24};
  std::vector<Scenario> out;
  for (int i = 0; i < 10; ++i) {
    Scenario s;
    ProblemConfig& c = s.config;
    c.preset = "power-drift";
    c.dim = 1 + i % 3;
    c.cells.assign(c.dim, cells[c.dim]);
    c.theta = thetas[(i / 3 + i) % 3];
    c.alpha = 0.5;
    c.beta = 2.0;
    c.M_form = "random:0.5,2," + std::to_string(100 + i);
    c.mass = 0.5 + 4.5 * unit(rng);
    c.width = 0.08 + 0.07 * unit(rng);
    c.horizon = 0.05;
    switch (i % 4) {
      case 0:
        c.E_form = "identity";
        break;
      case 1: {
        std::ostringstream e;
        e << "constant:";
        for (int a = 0; a < c.dim; ++a) e << (a ? "," : "") << -2.0 + 4.0 * unit(rng);
        c.E_form = e.str();
        break;
      }
      case 2:
        c.E_form = c.dim >= 2 ? "swirl:3" : "pulsating:2,30";
        break;
      default:
        c.E_form = "pulsating:1.5,20";
        break;
    }
    s.source = i % 2 == 1;
    if (s.source) c.f_form = (i % 4 == 1) ? "constant:" + std::to_string(0.5 + unit(rng)) : "gaussian:3,0.1";
    out.push_back(s);
  }
  return out;
}

struct ScenarioRun {
  Scenario scenario;
  ProblemSpec problem;
  Trajectory trajectory;
  DiagnosticsReport report;
};

const std::vector<ScenarioRun>& scenario_runs() {
  static const std::vector<ScenarioRun> runs = [] {
    std::vector<ScenarioRun> out;
    for (const Scenario& s : mass_scenarios()) {
      ScenarioRun r;
      r.scenario = s;
      r.problem = make_problem(s.config);
      r.trajectory = run(r.problem, SolverConfig{});
      ConstantsConfig k;
      k.alpha = s.config.alpha;
      k.beta = s.config.beta;
      DiagnosticsOptions opt;
      opt.m_values = {2.0, 1.5};
      opt.fit_decay = false;
      opt.gn_samples = 20;
      r.report = run_diagnostics(r.trajectory, r.problem, k, opt);
      out.push_back(std::move(r));
    }
    return out;
  }();
  return runs;
}

Outcome criterion_mass_bound() {
  Outcome o;
  int monotone = 0;
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& r : scenario_runs()) {
    const double m0 = r.report.M0;
    // Independent recomputation of the bound from the recorded norms.
    double source_mass = 0.0;
    for (std::size_t k = 0; k < r.trajectory.norms.records.size(); ++k) {
      const auto& rec = r.trajectory.norms.records[k];
      if (k > 0 && r.scenario.source) {
        const Eigen::VectorXd f = r.problem.coefficients.f.sample(r.problem.grid, rec.t);
        source_mass += rec.dt * f.cwiseAbs().sum() * r.problem.grid.cell_volume();
      }
      const double bound = lp_norm(initial_datum(r.problem), 1.0) + source_mass;
      const double slack = bound + 1e-8 * m0 - rec.L1;
      worst = std::min(worst, slack / m0);
      if (slack < 0.0) o.pass = false;
    }
    if (r.trajectory.status != RunStatus::Completed) o.pass = false;
    if (!r.report.mass_bound.ok) o.pass = false;
    if (!r.scenario.source) {
      ++monotone;
      if (!r.report.l1_monotone.applicable || !r.report.l1_monotone.ok) o.pass = false;
    }
  }
  o.detail = fmt("10 scenarios, %g with f=0 checked for monotone L1, worst relative slack %.3e", monotone, worst);
  return o;
}

// ---------------------------------------------------------------------------

Outcome criterion_contraction() {
  Outcome o;
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int ordered = 0;
  double worst = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < 20; ++i) {
    ProblemConfig c;
    c.preset = "power-drift";
    c.dim = 1 + i % 2;
    c.cells.assign(c.dim, c.dim == 1 ? 128 : 32);
    c.theta = (i % 3 == 0) ? 0.5 : 1.0;
    c.horizon = 0.04;
    c.E_form = i % 2 ? "identity" : (c.dim == 1 ? "constant:1.5" : "constant:1,-1.5");
    ProblemConfig cv = c, cw = c;
    const bool make_ordered = i % 2 == 0;
    cv.mass = 1.0 + 3.0 * unit(rng);
    cw.mass = make_ordered ? 0.5 * cv.mass : 1.0 + 3.0 * unit(rng);
    cv.width = 0.1;
    cw.width = make_ordered ? 0.1 : 0.06 + 0.1 * unit(rng);
    if (i % 4 == 1) cv.f_form = "constant:1";
    if (i % 4 == 2) {
      cv.f_form = "gaussian:2,0.1";
      cw.f_form = "gaussian:1,0.1";
    }
    const ProblemSpec v = make_problem(cv), w = make_problem(cw);
    const PairedRun pr = paired_run(v, w, SolverConfig{});
    const PairedRunReport rep = contraction_gap(pr, v, w);
    worst = std::max(worst, rep.max_gap - rep.tolerance);
    if (!rep.contraction_ok) o.pass = false;
    if (make_ordered) {
      if (!rep.order_applicable) o.pass = false;
      ++ordered;
    }
    if (rep.order_applicable && !rep.ordered_ok) o.pass = false;
  }
  o.detail = fmt("20 paired runs, %g ordered; max(gap - budget) = %.3e", ordered, worst);
  return o;
}

// ---------------------------------------------------------------------------

Outcome criterion_heat_decay() {
  ProblemConfig c;
  c.preset = "heat";
  c.dim = 3;
  c.cells = {32, 32, 32};
  c.width = 0.02;
  c.horizon = 0.02;
  const ProblemSpec p = make_problem(c);
  SolverConfig sc;
  sc.dt_policy = DtPolicy::Fixed;
  sc.dt = 1e-4;
  const Trajectory t = run(p, sc);
  const FitWindow w = pre_boundary_window(t.norms);
  const DecayFit fit = fit_decay_exponent(t.norms, 2.0, w, 3, 1.0);
  Outcome o;
  o.pass = t.status == RunStatus::Completed && fit.relative_deviation <= 0.2;
  o.detail = fmt("slope %.4f vs -0.75 on [%.2e, ", fit.slope, w.t_lo) + fmt("%.2e], deviation %.1f%%", w.t_hi, 100 * fit.relative_deviation);
  return o;
}

// ---------------------------------------------------------------------------

Outcome criterion_ode() {
  Outcome o;
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> pd(0.1, 3.0), yd(0.0, 4.0);
  std::vector<double> times;
  for (int i = 0; i <= 60; ++i) times.push_back(1e-3 * std::pow(5000.0, i / 60.0));
  double worst_bound = -std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < 100; ++trial) {
    OdeParams p;
    p.a = pd(rng);
    p.K = pd(rng);
    p.C = pd(rng);
    p.y0 = std::pow(10.0, yd(rng));
    const OdeSolution s = ode_integrate_at(p, times);
    for (std::size_t i = 0; i < times.size(); ++i) {
      const double rel = s.y[i] / ode_bound(p.a, p.K, p.C, times[i]) - 1.0;
      worst_bound = std::max(worst_bound, rel);
      if (rel > 1e-6) o.pass = false;
    }
  }
  std::uniform_real_distribution<double> md(1.0, 4.0), td(0.05, 1.0), rd(0.0, 0.3), cd(0.2, 3.0), ud(0.3, 3.0);
  double worst_time = 0.0;
  int sets = 0;
  while (sets < 50) {
    const int N = 1 + static_cast<int>(rng() % 3);
    const double mu = md(rng), th = td(rng), ri = rd(rng), C = cd(rng), u0 = ud(rng);
    if (!(mu * (1 - N * ri) - N * th > 0.0)) continue;
    const BlowupTime bt = blowup_time(mu, ri, N, th, C, u0);
    OdeParams p;
    p.C_m = C;
    p.d = bt.b;
    p.y0 = std::pow(u0, mu);
    // Threshold far enough out that the hitting time is within 0.1% of the
    // explosion time: (y0 / Y)^b <= 1e-3.
    OdeOptions opt;
    opt.blowup_threshold = std::min(1e300, p.y0 * std::pow(1e3, 1.0 / bt.b));
    const OdeSolution s = ode_integrate(p, 3.0 * bt.T_star, opt);
    ++sets;
    if (!s.blowup_time) {
      o.pass = false;
      continue;
    }
    const double rel = std::abs(*s.blowup_time - bt.T_star) / bt.T_star;
    worst_time = std::max(worst_time, rel);
    if (rel > 0.01) o.pass = false;
  }
  o.detail = fmt("max relative bound excess %.2e over 100 sets; max T* mismatch %.2e over %g sets", worst_bound,
                 worst_time, sets);
  return o;
}

// ---------------------------------------------------------------------------

Outcome criterion_exponents() {
  Outcome o;
  std::mt19937_64 rng(5);
  double worst = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const int N = 1 + static_cast<int>(rng() % 3);
    std::uniform_real_distribution<double> qd(1.0 + 1e-9, 0.5 * (N + 2) - 1e-3);
    const double q = qd(rng);
    // Independent evaluation of the closed forms.
    const double qss = (N + 2.0) * q / (N + 2.0 - 2.0 * q);
    const double gamma = (q * N - 2.0 * N - 4.0 + 4.0 * q) / (2.0 * (N + 2.0 - 2.0 * q));
    const double qc = q / (q - 1.0);
    const auto t = exponent_table<double>(N, q);
    // Residuals relative to the size of the summands: near q = 1 the
    // conjugate is large and 2 gamma + 1 cancels, so double precision cannot
    // do better than eps times that scale. Exactness is checked in Rational.
    const double s1 = std::max(qc * (2 * std::abs(gamma) + 1), qss);
    const double s2 = std::max(2 * std::abs(gamma) + 2, qss);
    const double e1 = std::abs(qc * (2 * gamma + 1) - qss) / s1;
    const double e2 = std::abs(2 * gamma + 2 - qss * N / (N + 2.0)) / s2;
    const double e3 = std::abs(*t.conjugate_identity_residual()) / s1;
    const double e4 = std::abs(t.gamma_identity_residual()) / s2;
    const double e5 = std::abs(t.q_star_star - qss) / qss + std::abs(t.gamma - gamma) / std::max(1.0, std::abs(gamma));
    worst = std::max({worst, e1, e2, e3, e4, e5});
  }
  if (worst > 1e-12) o.pass = false;
  bool exact = true;
  for (int N = 1; N <= 3; ++N) {
    const Rational sp(2 * (N + 2), N + 4);
    const Rational qs = Rational(N + 2) * sp / (Rational(N + 2) - sp);
    const Rational g = (sp * Rational(N) - Rational(2 * N + 4) + Rational(4) * sp) /
                       (Rational(2) * (Rational(N + 2) - Rational(2) * sp));
    exact = exact && qs == Rational(2) && g == Rational(0);
    exact = exact && q_star(N, sigma_prime<Rational>(N)) == Rational(2) &&
            gamma_exponent(N, sigma_prime<Rational>(N)) == Rational(0);
  }
  o.pass = o.pass && exact;
  o.detail = fmt("500 random (q, N): worst relative residual %.2e; exact q*(sigma')=2, gamma(sigma')=0: ", worst) +
             (exact ? "yes" : "no");
  return o;
}

// ---------------------------------------------------------------------------

Outcome criterion_ball() {
  Outcome o;
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> dd(0.01, 20.0), td(0.05, 4.0), sd(0.0, 2.0);
  double worst = 0.0;
  int agree = 0, checked = 0;
  for (int i = 0; i < 200; ++i) {
    const double delta = dd(rng), theta = td(rng);
    const BallParams b = ball_params(delta, theta);
    const double R = 1.0 / std::pow(delta * (theta + 1.0), 1.0 / theta);
    const double Kd = R * theta / (theta + 1.0);
    const double res = delta * std::pow(R, theta + 1.0) + Kd - R;
    worst = std::max({worst, std::abs(b.identity_residual()) / std::max(1.0, R), std::abs(res) / std::max(1.0, R),
                      std::abs(b.R - R) / R, std::abs(b.K_delta - Kd) / Kd});
    for (int j = 0; j < 5; ++j) {
      const double s = sd(rng) * R, K = sd(rng) * Kd;
      const bool direct = delta * std::pow(s, theta + 1.0) + K <= R;
      ++checked;
      if (ball_check(delta, K, theta, s) == direct) ++agree;
    }
  }
  o.pass = worst <= 1e-12 && agree == checked;
  o.detail = fmt("worst identity residual %.2e over 200 (delta, theta); truth table %g/%g", worst, agree, checked);
  return o;
}

// ---------------------------------------------------------------------------

Outcome criterion_kq() {
  Outcome o;
  ProblemConfig small;
  small.preset = "kq";
  small.dim = 3;
  small.cells = {24, 24, 24};
  small.mass = 0.01;
  small.horizon = 1.0;
  SolverConfig sc;
  sc.growth_cap = 10.0;
  const Trajectory ts = run(make_problem(small), sc);
  const auto& rs = ts.norms.records;
  bool decreasing = ts.status == RunStatus::Completed;
  for (std::size_t k = rs.size() / 2; k + 1 < rs.size(); ++k) decreasing = decreasing && rs[k + 1].Linf < rs[k].Linf;

  ProblemConfig large = small;
  large.mass = 50.0;
  large.horizon = 2.0;
  const Trajectory tl = run(make_problem(large), sc);
  const auto& rl = tl.norms.records;
  double peak = 0.0;
  for (const auto& r : rl) {
    if (std::isfinite(r.Linf)) peak = std::max(peak, r.Linf);
  }
  const bool flagged = tl.status == RunStatus::BlowUpSuspected && tl.final_time() < 2.0;
  o.pass = decreasing && flagged;
  o.detail = std::string("mass 0.01: ") + to_string(ts.status) + (decreasing ? ", sup norm decreasing" : ", NOT decreasing") +
             "; mass 50: " + to_string(tl.status) + fmt(" at t=%.4f, sup growth %.1fx", tl.final_time(), peak / rl.front().Linf);
  return o;
}

// ---------------------------------------------------------------------------

Outcome criterion_fixed_point() {
  Outcome o;
  ProblemConfig c;
  c.preset = "power-drift";
  c.dim = 2;
  c.cells = {32, 32};
  c.theta = 1.0;
  c.mass = 0.05;
  c.width = 0.1;
  c.E_form = "constant:0.5,0.5";
  c.horizon = 0.05;
  const ProblemSpec p = make_problem(c);
  SolverConfig sc;
  sc.dt_policy = DtPolicy::Fixed;
  sc.dt = 5e-4;
  sc.lin_tol = 1e-13;
  const double tol = 1e-10;
  const double q = sigma_prime<double>(2);
  const Smallness small = problem_smallness(p, sc, q, 0.0, 1.0);
  const PicardResult pr = picard_iterate(p, sc, tol, 20, q);
  bool geometric = pr.report.converged && pr.report.iterations <= 20;
  const auto ratios = pr.report.contraction_ratios();
  for (const double r : ratios) geometric = geometric && r < 1.0;

  // Direct nonlinear runs at dt and dt/2; their gap is the scheme error.
  const Trajectory direct = run(p, sc);
  SolverConfig half = sc;
  half.dt = 0.5 * sc.dt;
  const Trajectory fine = run(p, half);
  const Field& u_pic = pr.u[pr.u.size() - 1];
  const Field& u_dir = direct.series[direct.series.size() - 1];
  const Field& u_fine = fine.series[fine.series.size() - 1];
  const double l1 = lp_norm(u_dir, 1.0);
  const double gap = lp_norm(Field(p.grid, u_pic.values() - u_dir.values()), 1.0);
  const double scheme = lp_norm(Field(p.grid, u_fine.values() - u_dir.values()), 1.0);
  const double budget = 5.0 * (tol * l1 + scheme);
  o.pass = small.satisfied && geometric && gap <= budget;
  o.detail = fmt("smallness %.3f <= %.3f; ", small.lhs, small.threshold) +
             fmt("%g iterations, max diff ratio %.3f; ", pr.report.iterations,
                 ratios.empty() ? 0.0 : *std::max_element(ratios.begin(), ratios.end())) +
             fmt("L1 gap to direct run %.2e vs budget %.2e", gap, budget);
  return o;
}

// ---------------------------------------------------------------------------

Outcome criterion_diff_inequality() {
  Outcome o;
  double worst = std::numeric_limits<double>::infinity();
  std::size_t points = 0;
  for (const auto& r : scenario_runs()) {
    for (const auto& d : r.report.diff_ineq) {
      points += d.t.size();
      worst = std::min(worst, d.result.worst_slack);
      if (!d.result.ok || d.t.empty()) o.pass = false;
    }
  }
  o.detail = fmt("m in {2, 1.5} on 10 scenarios, %g interior times, worst slack %.3e", static_cast<double>(points), worst);
  return o;
}

Outcome criterion_superlevel() {
  Outcome o;
  int levels = 0;
  for (const auto& r : scenario_runs()) {
    // Independent check on the dyadic levels below twice the sup norm.
    const SpaceTimeSeries& s = r.trajectory.series;
    double sup = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) sup = std::max(sup, linf_norm(s[j]));
    const double T = s.final_time();
    for (int j = -10; std::ldexp(1.0, j) <= 2.0 * sup; ++j) {
      const double k = std::ldexp(1.0, j);
      ++levels;
      if (superlevel_measure(s, k) > T * r.report.M0 / k * (1 + 1e-12)) o.pass = false;
    }
    if (!r.report.superlevel.ok) o.pass = false;
  }
  o.detail = fmt("%g dyadic levels over 10 scenarios", levels);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"mass bound", criterion_mass_bound},
      {"L1 contraction", criterion_contraction},
      {"heat decay exponent", criterion_heat_decay},
      {"ODE comparison and blow-up time", criterion_ode},
      {"exponent identities", criterion_exponents},
      {"invariant ball algebra", criterion_ball},
      {"kq small/large mass dichotomy", criterion_kq},
      {"Picard fixed point", criterion_fixed_point},
      {"weakened differential inequality", criterion_diff_inequality},
      {"superlevel bound", criterion_superlevel},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %d (%s): %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first,
                o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
