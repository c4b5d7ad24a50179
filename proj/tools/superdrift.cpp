// superdrift: command-line front end for runs, sweeps and estimate checks.

#include "superdrift/comparison.hpp"
#include "superdrift/config.hpp"
#include "superdrift/diagnostics.hpp"
#include "superdrift/estimates.hpp"
#include "superdrift/field_io.hpp"
#include "superdrift/fixedpoint.hpp"
#include "superdrift/fv_solver.hpp"
#include "superdrift/model.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace superdrift;

namespace {

enum Exit : int { kOk = 0, kInvalidConfig = 1, kSolverFailure = 2, kChecksFailed = 3 };

// Flags shared by every subcommand that builds a problem. Each one, when
// given, overrides the matching key of the --config document.
struct ProblemFlags {
  std::string config;
  std::optional<std::string> preset;
  std::optional<int> dim;
  std::vector<int> cells;
  std::vector<double> extents;
  std::optional<double> mass;
  std::optional<double> horizon;
  std::optional<double> theta;
  std::optional<std::string> reg_n;
  std::optional<std::string> form;
  std::optional<double> width;
  std::optional<double> alpha;
  std::optional<double> beta;
  std::optional<std::string> E_form;
  std::optional<std::string> f_form;
  std::optional<std::string> M_form;
  std::optional<std::string> u0_form;
  std::optional<std::string> dt_policy;
  std::optional<double> dt;
  std::optional<double> dt_max;
  std::optional<double> safety;
  std::optional<double> cap_linf;
  std::optional<double> growth_cap;
  std::optional<int> stride;
};

void add_problem_flags(CLI::App* app, ProblemFlags& f) {
  app->add_option("--config", f.config, "JSON configuration file");
  app->add_option("--preset", f.preset, "heat | power-drift | kq | custom");
  app->add_option("--dim,--N", f.dim, "space dimension (1-3)");
  app->add_option("--cells", f.cells, "cells per axis")->delimiter(',');
  app->add_option("--extents", f.extents, "box edge lengths")->delimiter(',');
  app->add_option("--mass", f.mass, "mass of the Gaussian initial datum");
  app->add_option("--horizon", f.horizon, "final time");
  app->add_option("--theta", f.theta, "growth exponent of the drift nonlinearity");
  app->add_option("--n", f.reg_n, "regularization level, or inf");
  app->add_option("--form", f.form, "power | kq");
  app->add_option("--width", f.width, "Gaussian width of u0");
  app->add_option("--alpha", f.alpha, "lower ellipticity bound");
  app->add_option("--beta", f.beta, "upper ellipticity bound");
  app->add_option("--E", f.E_form, "drift field form");
  app->add_option("--f", f.f_form, "source form");
  app->add_option("--M", f.M_form, "diffusivity form");
  app->add_option("--u0", f.u0_form, "initial datum form");
  app->add_option("--dt-policy", f.dt_policy, "fixed | adaptive");
  app->add_option("--dt", f.dt, "fixed time step");
  app->add_option("--dt-max", f.dt_max, "step ceiling");
  app->add_option("--safety", f.safety, "CFL safety factor");
  app->add_option("--cap-linf", f.cap_linf, "sup-norm cap for the blow-up flag");
  app->add_option("--growth-cap", f.growth_cap, "sup-norm growth factor for the blow-up flag (0 disables)");
  app->add_option("--stride", f.stride, "snapshot stride in steps");
}

json read_json_file(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("cannot parse " + path + ": " + e.what());
  }
}

json config_document(const ProblemFlags& f) {
  json doc = f.config.empty() ? json::object() : read_json_file(f.config);
  if (!doc.is_object()) throw ConfigError("configuration must be a JSON object");
  auto set = [&doc](const char* key, const auto& value) {
    if (value) doc[key] = *value;
  };
  set("preset", f.preset);
  set("dim", f.dim);
  if (!f.cells.empty()) doc["cells"] = f.cells;
  if (!f.extents.empty()) doc["extents"] = f.extents;
  set("mass", f.mass);
  set("horizon", f.horizon);
  set("theta", f.theta);
  if (f.reg_n) {
    if (*f.reg_n == "inf") {
      doc["reg_n"] = "inf";
    } else {
      try {
        doc["reg_n"] = std::stod(*f.reg_n);
      } catch (const std::exception&) {
        throw ConfigError("--n must be a number or inf");
      }
    }
  }
  set("form", f.form);
  set("width", f.width);
  set("alpha", f.alpha);
  set("beta", f.beta);
  set("E_form", f.E_form);
  set("f_form", f.f_form);
  set("M_form", f.M_form);
  set("u0_form", f.u0_form);
  if (!doc.contains("solver")) doc["solver"] = json::object();
  json& s = doc["solver"];
  auto set_s = [&s](const char* key, const auto& value) {
    if (value) s[key] = *value;
  };
  set_s("dt_policy", f.dt_policy);
  set_s("dt", f.dt);
  set_s("dt_max", f.dt_max);
  set_s("safety", f.safety);
  set_s("cap_linf", f.cap_linf);
  set_s("growth_cap", f.growth_cap);
  set_s("stride", f.stride);
  return doc;
}

struct Resolved {
  RunConfig config;
  ProblemSpec problem;
  json doc;  // fully resolved configuration
  std::string hash;
};

Resolved resolve(const json& doc) {
  Resolved r;
  r.config = parse_run_config(doc);
  r.problem = make_problem(r.config.problem);
  const Grid& g = r.problem.grid;
  r.config.problem.dim = g.dim();
  r.config.problem.cells.clear();
  r.config.problem.extents.clear();
  for (int a = 0; a < g.dim(); ++a) {
    r.config.problem.cells.push_back(g.cells(a));
    r.config.problem.extents.push_back(g.extent(a));
  }
  r.doc = to_json(r.config);
  r.hash = config_hash(r.doc);
  return r;
}

std::string command_line(int argc, char** argv) {
  std::ostringstream out;
  for (int i = 1; i < argc; ++i) out << (i > 1 ? " " : "") << argv[i];
  return out.str();
}

void write_json(const fs::path& path, const json& doc) { write_file_atomic(path.string(), doc.dump(2) + "\n"); }

void print_json(const json& doc) { std::cout << doc.dump(2) << "\n"; }

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

double max_linf(const Trajectory& traj) {
  double m = 0.0;
  for (const auto& r : traj.norms.records) m = std::max(m, r.Linf);
  return m;
}

// ---------------------------------------------------------------------------
// run

struct RunFlags {
  ProblemFlags problem;
  std::string out = "out";
  std::string snapshots = "binary";
  bool fail_on_blowup = false;
};

struct RunArtifacts {
  Trajectory trajectory;
  std::vector<std::string> outputs;
};

RunArtifacts execute_run(const Resolved& r, const fs::path& dir, const std::string& snapshots) {
  fs::create_directories(dir);
  RunArtifacts a;
  a.trajectory = run(r.problem, r.config.solver);
  const Trajectory& t = a.trajectory;
  write_file_atomic((dir / "norms.csv").string(), norms_to_csv(t.norms, true));
  a.outputs.push_back("norms.csv");
  if (snapshots == "binary") {
    write_series_binary((dir / "snapshots.bin").string(), t.series);
    a.outputs.push_back("snapshots.bin");
  } else if (snapshots == "csv") {
    write_file_atomic((dir / "snapshots.csv").string(), series_to_csv(t.series));
    a.outputs.push_back("snapshots.csv");
  }
  return a;
}

json manifest(const Resolved& r, const std::string& command, const std::vector<std::string>& outputs,
              const std::string& status, double wall_time) {
  json m;
  m["config_hash"] = r.hash;
  m["command"] = command;
  m["outputs"] = outputs;
  m["status"] = status;
  m["wall_time"] = wall_time;
  m["config"] = r.doc;
  return m;
}

int cmd_run(const RunFlags& f, const std::string& command) {
  const auto start = std::chrono::steady_clock::now();
  const Resolved r = resolve(config_document(f.problem));
  const fs::path dir(f.out);
  RunArtifacts a = execute_run(r, dir, f.snapshots);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  a.outputs.push_back("manifest.json");
  json m = manifest(r, command, a.outputs, to_string(a.trajectory.status), wall);
  m["final_time"] = a.trajectory.final_time();
  m["steps"] = a.trajectory.steps.size();
  m["max_linf"] = max_linf(a.trajectory);
  if (!a.trajectory.message.empty()) m["message"] = a.trajectory.message;
  write_json(dir / "manifest.json", m);
  std::cout << "status " << to_string(a.trajectory.status) << " at t=" << a.trajectory.final_time() << " ("
            << a.trajectory.steps.size() << " steps), outputs in " << dir.string() << "\n";
  switch (a.trajectory.status) {
    case RunStatus::Completed: return kOk;
    case RunStatus::BlowUpSuspected: return f.fail_on_blowup ? kSolverFailure : kOk;
    case RunStatus::SolverFailure: return kSolverFailure;
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepFlags {
  ProblemFlags problem;
  std::vector<double> masses;
  std::vector<double> thetas;
  std::vector<std::string> ns;
  std::string out = "sweep";
  std::string snapshots = "none";
};

unsigned worker_count(std::size_t jobs) {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SUPERDRIFT_THREADS")) {
    try {
      const int cap = std::stoi(env);
      if (cap > 0) n = std::min(n, static_cast<unsigned>(cap));
    } catch (const std::exception&) {
      throw ConfigError("SUPERDRIFT_THREADS must be a positive integer");
    }
  }
  return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(jobs, 1)));
}

int cmd_sweep(const SweepFlags& f, const std::string& command) {
  const json base = config_document(f.problem);
  const std::vector<double> masses = f.masses.empty() ? std::vector<double>{base.value("mass", 1.0)} : f.masses;
  const std::vector<double> thetas = f.thetas.empty() ? std::vector<double>{base.value("theta", 1.0)} : f.thetas;
  std::vector<json> ns;
  if (f.ns.empty()) {
    ns.push_back(base.contains("reg_n") ? base.at("reg_n") : json(1e6));
  } else {
    for (const auto& s : f.ns) {
      if (s == "inf") {
        ns.push_back("inf");
      } else {
        try {
          ns.push_back(std::stod(s));
        } catch (const std::exception&) {
          throw ConfigError("--ns entries must be numbers or inf");
        }
      }
    }
  }

  // Resolve every job up front so configuration errors surface before any work.
  struct Job {
    Resolved resolved;
    double mass, theta;
    json n;
  };
  std::vector<Job> jobs;
  for (const double m : masses) {
    for (const double th : thetas) {
      for (const auto& n : ns) {
        json doc = base;
        doc["mass"] = m;
        doc["theta"] = th;
        doc["reg_n"] = n;
        jobs.push_back({resolve(doc), m, th, n});
      }
    }
  }

  const fs::path root(f.out);
  fs::create_directories(root);
  struct Row {
    std::string status;
    double final_time = 0.0, max_linf = 0.0;
  };
  std::vector<Row> rows(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::string first_error;
  auto worker = [&]() {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        const auto start = std::chrono::steady_clock::now();
        const fs::path dir = root / ("run_" + std::to_string(i));
        RunArtifacts a = execute_run(jobs[i].resolved, dir, f.snapshots);
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        a.outputs.push_back("manifest.json");
        write_json(dir / "manifest.json",
                   manifest(jobs[i].resolved, command, a.outputs, to_string(a.trajectory.status), wall));
        rows[i] = {to_string(a.trajectory.status), a.trajectory.final_time(), max_linf(a.trajectory)};
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (first_error.empty()) first_error = e.what();
        rows[i].status = "solver-failure";
      }
    }
  };
  std::vector<std::thread> pool;
  const unsigned workers = worker_count(jobs.size());
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  std::ostringstream csv;
  csv << std::setprecision(17) << "run,mass,theta,n,status,final_time,max_linf\n";
  bool failure = false;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const json& n = jobs[i].n;
    csv << i << ',' << jobs[i].mass << ',' << jobs[i].theta << ','
        << (n.is_string() ? n.get<std::string>() : n.dump()) << ',' << rows[i].status << ',' << rows[i].final_time
        << ',' << rows[i].max_linf << '\n';
    failure = failure || rows[i].status == "solver-failure";
  }
  write_file_atomic((root / "sweep.csv").string(), csv.str());
  std::cout << jobs.size() << " runs on " << workers << " workers, summary in " << (root / "sweep.csv").string()
            << "\n";
  if (!first_error.empty()) std::cerr << "error: " << first_error << "\n";
  return failure ? kSolverFailure : kOk;
}

// ---------------------------------------------------------------------------
// regime and constants

std::optional<double> parse_r_inv(const std::string& r) {
  if (r == "inf") return 0.0;
  double v = 0.0;
  try {
    v = std::stod(r);
  } catch (const std::exception&) {
    throw ConfigError("--r must be a number or inf");
  }
  if (!(v > 0.0)) throw ConfigError("--r must be positive");
  return 1.0 / v;
}

json exponents_json(int N, double q, double r_inv, double theta, double mu, double C_mu, double norm_u0) {
  json e;
  e["q"] = q;
  e["q_star"] = q_star(N, q);
  e["q_star_star"] = q_star_star(N, q);
  e["gamma"] = gamma_exponent(N, q);
  e["sigma"] = sigma_exponent<double>(N);
  e["sigma_prime"] = sigma_prime<double>(N);
  try {
    const BlowupTime bt = blowup_time(mu, r_inv, N, theta, C_mu, norm_u0);
    e["b"] = finite_or_null(bt.b);
    e["T_star"] = finite_or_null(bt.T_star);
  } catch (const std::exception&) {
    e["b"] = nullptr;
    e["T_star"] = nullptr;
  }
  return e;
}

struct RegimeFlags {
  int N = 3;
  double theta = 0.0;
  std::string r = "inf";
  double mu = 1.0;
  std::optional<double> q;
  double C_mu = 1.0;
  double norm_u0 = 1.0;
};

int cmd_regime(const RegimeFlags& f) {
  const std::optional<double> r_inv = parse_r_inv(f.r);
  const RegimeReport rep = classify_regime(f.N, f.theta, *r_inv, f.mu, f.q);
  json out;
  out["regime"] = to_string(rep.regime);
  out["binding_condition"] = rep.binding_condition;
  out["slack"] = rep.slack;
  json satisfied = json::array();
  for (const Regime g : rep.satisfied) satisfied.push_back(to_string(g));
  out["satisfied"] = satisfied;
  json checks = json::array();
  for (const auto& c : rep.checks) {
    checks.push_back({{"regime", to_string(c.regime)},
                      {"condition", c.condition},
                      {"slack", c.slack},
                      {"holds", c.holds},
                      {"note", c.note}});
  }
  out["checks"] = checks;
  const double q = f.q ? *f.q : sigma_prime<double>(f.N);
  try {
    out["exponents"] = exponents_json(f.N, q, *r_inv, f.theta, f.mu, f.C_mu, f.norm_u0);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  print_json(out);
  return kOk;
}

struct ConstantsFlags {
  int N = 3;
  double theta = 1.0;
  std::optional<double> q;
  std::string r = "inf";
  double mu = 1.0;
  double m = 2.0;
  double C = 1.0;
  double C_mu = 1.0;
  double norm_u0 = 1.0;
  double norm_E = 1.0;
  double norm_f = 0.0;
  double M0 = 1.0;
  double A = 1.0;
  double T = 1.0;
};

int cmd_constants(const ConstantsFlags& f) {
  const double r_inv = *parse_r_inv(f.r);
  const double q = f.q ? *f.q : sigma_prime<double>(f.N);
  json out;
  try {
    const auto tab = exponent_table(f.N, q, r_inv, f.theta, f.mu, f.m);
    json t;
    t["N"] = tab.N;
    t["q"] = tab.q;
    t["r_inv"] = tab.r_inv;
    t["theta"] = tab.theta;
    t["mu"] = tab.mu;
    t["m"] = tab.m;
    t["q_star"] = tab.q_star;
    t["q_star_star"] = tab.q_star_star;
    t["gamma"] = tab.gamma;
    t["sigma"] = tab.sigma;
    t["sigma_prime"] = tab.sigma_prime;
    t["q_conjugate"] = tab.q_conjugate ? json(*tab.q_conjugate) : json(nullptr);
    t["decay_exponent"] = tab.decay_exponent;
    t["gamma_identity_residual"] = tab.gamma_identity_residual();
    out["exponents"] = t;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  out["blowup"] = exponents_json(f.N, q, r_inv, f.theta, f.mu, f.C_mu, f.norm_u0);
  if (f.theta > 0.0) {
    const SlicingPlan plan = slicing_plan(f.theta, f.norm_E, f.M0, f.A, f.T);
    out["slicing"] = {{"h", finite_or_null(plan.h)}, {"slices", plan.slices}};
  } else {
    out["slicing"] = nullptr;
  }
  if (f.theta > 0.0) {
    const Smallness s = smallness_check(f.theta, f.norm_E, f.norm_f, f.norm_u0, f.C);
    out["smallness"] = {{"lhs", s.lhs}, {"threshold", s.threshold}, {"satisfied", s.satisfied}};
  } else {
    out["smallness"] = nullptr;
  }
  out["note"] = "relative to assumed constants C=" + std::to_string(f.C) + ", A=" + std::to_string(f.A);
  print_json(out);
  return kOk;
}

// ---------------------------------------------------------------------------
// diagnose

struct DiagnoseFlags {
  std::string run_dir;
  std::string out;
  std::vector<double> m_values{2.0};
  std::optional<double> C_GN;
  double mu = 1.0;
};

json check_json(const CheckResult& c) {
  return {{"applicable", c.applicable},
          {"ok", c.ok},
          {"worst_slack", finite_or_null(c.worst_slack)},
          {"worst_time", c.worst_time}};
}

int cmd_diagnose(const DiagnoseFlags& f) {
  const fs::path dir(f.run_dir);
  const json man = read_json_file((dir / "manifest.json").string());
  if (!man.contains("config")) throw ConfigError("manifest has no resolved configuration");
  RunConfig cfg = parse_run_config(man.at("config"));
  if (f.C_GN) cfg.constants.C_GN = *f.C_GN;
  const ProblemSpec problem = make_problem(cfg.problem);
  if (!fs::exists(dir / "snapshots.bin")) throw ConfigError("diagnose needs binary snapshots in " + dir.string());

  Trajectory traj;
  traj.series = read_series_binary((dir / "snapshots.bin").string());
  if (traj.series.grid() != problem.grid) throw ConfigError("stored snapshots do not match the configured grid");
  traj.norms.m = cfg.solver.norm_m;
  for (std::size_t j = 0; j < traj.series.size(); ++j) {
    NormRecord rec = measure(traj.series[j], traj.series.times()[j], cfg.solver.norm_m);
    rec.dt = j == 0 ? 0.0 : traj.series.times()[j] - traj.series.times()[j - 1];
    traj.norms.records.push_back(rec);
  }
  if (man.value("status", "") == "blow-up-suspected") traj.status = RunStatus::BlowUpSuspected;

  DiagnosticsOptions opts;
  opts.m_values = f.m_values;
  opts.decay_mu = f.mu;
  const DiagnosticsReport rep = run_diagnostics(traj, problem, cfg.constants, opts);

  json out;
  out["M0"] = rep.M0;
  out["mass_bound"] = check_json(rep.mass_bound);
  out["l1_monotone"] = check_json(rep.l1_monotone);
  out["superlevel"] = check_json(rep.superlevel);
  json di = json::array();
  for (const auto& d : rep.diff_ineq) di.push_back({{"m", d.m}, {"check", check_json(d.result)}});
  out["diff_ineq"] = di;
  out["gn"] = check_json(rep.gn);
  out["gn_ratio"] = rep.gn_ratio;
  out["C_GN"] = rep.C_GN;
  out["C_GN_note"] = cfg.constants.C_GN ? "configured" : "relative to assumed constants (empirical estimate)";
  if (rep.decay_fit) {
    const DecayFit& d = *rep.decay_fit;
    out["decay_fit"] = {{"slope", d.slope},
                        {"predicted", d.predicted},
                        {"relative_deviation", d.relative_deviation},
                        {"r_squared", d.r_squared},
                        {"samples", d.samples},
                        {"window", {d.window.t_lo, d.window.t_hi}}};
  } else {
    out["decay_fit"] = nullptr;
  }
  out["drift_flux_l2"] = rep.drift_flux_l2;
  out["all_ok"] = rep.all_ok();

  const fs::path out_dir = f.out.empty() ? dir : fs::path(f.out);
  fs::create_directories(out_dir);
  write_json(out_dir / "diagnostics.json", out);
  write_file_atomic((out_dir / "diagnostics.csv").string(), diagnostics_to_csv(traj, rep));
  print_json(out);
  return rep.all_ok() ? kOk : kChecksFailed;
}

// ---------------------------------------------------------------------------
// contraction-test

struct ContractionFlags {
  ProblemFlags problem;
  std::optional<double> w_mass;
  std::optional<std::string> w_u0;
  std::optional<std::string> w_f;
  std::string out = "contraction";
};

int cmd_contraction(const ContractionFlags& f) {
  const json doc_v = config_document(f.problem);
  json doc_w = doc_v;
  doc_w["mass"] = f.w_mass ? *f.w_mass : 0.5 * doc_v.value("mass", 1.0);
  if (f.w_u0) doc_w["u0_form"] = *f.w_u0;
  if (f.w_f) doc_w["f_form"] = *f.w_f;
  const Resolved v = resolve(doc_v);
  const Resolved w = resolve(doc_w);

  const PairedRun runs = paired_run(v.problem, w.problem, v.config.solver);
  if (runs.v.status == RunStatus::SolverFailure || runs.w.status == RunStatus::SolverFailure) {
    std::cerr << "error: paired run failed: " << runs.v.message << runs.w.message << "\n";
    return kSolverFailure;
  }
  const PairedRunReport rep = contraction_gap(runs, v.problem, w.problem, v.config.solver.lin_tol);

  const fs::path dir(f.out);
  fs::create_directories(dir);
  write_file_atomic((dir / "gap.csv").string(), gap_to_csv(rep));
  const bool pass = rep.contraction_ok && (!rep.order_applicable || rep.ordered_ok);
  json verdict;
  verdict["pass"] = pass;
  verdict["max_gap"] = rep.max_gap;
  verdict["tolerance"] = rep.tolerance;
  verdict["contraction_ok"] = rep.contraction_ok;
  verdict["order_applicable"] = rep.order_applicable;
  verdict["ordered_ok"] = rep.ordered_ok;
  verdict["min_order_gap"] = rep.min_order_gap;
  verdict["config_hash_v"] = v.hash;
  verdict["config_hash_w"] = w.hash;
  write_json(dir / "verdict.json", verdict);
  print_json(verdict);
  return pass ? kOk : kChecksFailed;
}

// ---------------------------------------------------------------------------
// fixedpoint

struct FixedpointFlags {
  ProblemFlags problem;
  double tol = 1e-10;
  int max_iter = 20;
  std::optional<double> q;
  std::string r = "inf";
  double C = 1.0;
  std::string out = "fixedpoint";
};

int cmd_fixedpoint(const FixedpointFlags& f) {
  const Resolved r = resolve(config_document(f.problem));
  const int N = r.problem.grid.dim();
  const double q = f.q ? *f.q : sigma_prime<double>(N);
  const double r_inv = *parse_r_inv(f.r);
  PicardResult res;
  Smallness small;
  try {
    res = picard_iterate(r.problem, r.config.solver, f.tol, f.max_iter, q);
    small = problem_smallness(r.problem, r.config.solver, q, r_inv, f.C);
  } catch (const SolverError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const PicardReport& rep = res.report;

  const fs::path dir(f.out);
  fs::create_directories(dir);
  write_file_atomic((dir / "picard.csv").string(), picard_to_csv(rep));
  json verdict;
  verdict["converged"] = rep.converged;
  verdict["diverged"] = rep.diverged;
  verdict["iterations"] = rep.iterations;
  verdict["final_norm"] = rep.iterates.empty() ? json(nullptr) : finite_or_null(rep.iterates.back());
  verdict["q"] = rep.q;
  verdict["q_star_star"] = rep.q_star_star;
  verdict["smallness"] = {{"lhs", small.lhs}, {"threshold", small.threshold}, {"satisfied", small.satisfied},
                          {"note", "relative to assumed C=" + std::to_string(f.C)}};
  verdict["message"] = rep.message;
  verdict["config_hash"] = r.hash;
  write_json(dir / "verdict.json", verdict);
  print_json(verdict);
  return rep.converged ? kOk : kChecksFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"superdrift: nonlinear Fokker-Planck simulator and estimate checks"};
  app.require_subcommand(1);

  RunFlags run_f;
  auto* run_cmd = app.add_subcommand("run", "simulate one configuration");
  add_problem_flags(run_cmd, run_f.problem);
  run_cmd->add_option("--out", run_f.out, "output directory");
  run_cmd->add_option("--snapshots", run_f.snapshots, "binary | csv | none")
      ->check(CLI::IsMember({"binary", "csv", "none"}));
  run_cmd->add_flag("--fail-on-blowup", run_f.fail_on_blowup, "exit 2 when blow-up is suspected");

  SweepFlags sweep_f;
  auto* sweep_cmd = app.add_subcommand("sweep", "run a (mass, theta, n) parameter grid in parallel");
  add_problem_flags(sweep_cmd, sweep_f.problem);
  sweep_cmd->add_option("--masses", sweep_f.masses, "masses")->delimiter(',');
  sweep_cmd->add_option("--thetas", sweep_f.thetas, "growth exponents")->delimiter(',');
  sweep_cmd->add_option("--ns", sweep_f.ns, "regularization levels (numbers or inf)")->delimiter(',');
  sweep_cmd->add_option("--out", sweep_f.out, "output directory");
  sweep_cmd->add_option("--snapshots", sweep_f.snapshots, "binary | csv | none")
      ->check(CLI::IsMember({"binary", "csv", "none"}));

  RegimeFlags regime_f;
  auto* regime_cmd = app.add_subcommand("regime", "classify (N, theta, r) into an existence regime");
  regime_cmd->add_option("--N", regime_f.N, "space dimension")->required();
  regime_cmd->add_option("--theta", regime_f.theta, "growth exponent")->required();
  regime_cmd->add_option("--r", regime_f.r, "integrability of E, or inf");
  regime_cmd->add_option("--mu", regime_f.mu, "integrability of u0");
  regime_cmd->add_option("--q", regime_f.q, "integrability of f");
  regime_cmd->add_option("--C-mu", regime_f.C_mu, "assumed constant of the blow-up ODE");
  regime_cmd->add_option("--u0-norm", regime_f.norm_u0, "|u0| in L^mu");

  DiagnoseFlags diag_f;
  auto* diag_cmd = app.add_subcommand("diagnose", "re-check a stored trajectory against the estimates");
  diag_cmd->add_option("--run-dir", diag_f.run_dir, "directory written by run")->required();
  diag_cmd->add_option("--out", diag_f.out, "report directory (defaults to the run directory)");
  diag_cmd->add_option("--m", diag_f.m_values, "exponents of the differential inequality")->delimiter(',');
  diag_cmd->add_option("--C-GN", diag_f.C_GN, "Gagliardo-Nirenberg constant");
  diag_cmd->add_option("--mu", diag_f.mu, "integrability exponent of the decay prediction");

  ContractionFlags con_f;
  auto* con_cmd = app.add_subcommand("contraction-test", "paired runs and the L1 contraction gap");
  add_problem_flags(con_cmd, con_f.problem);
  con_cmd->add_option("--w-mass", con_f.w_mass, "mass of the second run (default: half)");
  con_cmd->add_option("--w-u0", con_f.w_u0, "initial datum form of the second run");
  con_cmd->add_option("--w-f", con_f.w_f, "source form of the second run");
  con_cmd->add_option("--out", con_f.out, "output directory");

  FixedpointFlags fp_f;
  auto* fp_cmd = app.add_subcommand("fixedpoint", "Picard iteration of the frozen-drift map");
  add_problem_flags(fp_cmd, fp_f.problem);
  fp_cmd->add_option("--tol", fp_f.tol, "relative stopping tolerance");
  fp_cmd->add_option("--max-iter", fp_f.max_iter, "iteration limit");
  fp_cmd->add_option("--q", fp_f.q, "integrability exponent of f");
  fp_cmd->add_option("--r", fp_f.r, "integrability exponent of E, or inf");
  fp_cmd->add_option("--C", fp_f.C, "assumed constant of the smallness condition");
  fp_cmd->add_option("--out", fp_f.out, "output directory");

  ConstantsFlags k_f;
  auto* k_cmd = app.add_subcommand("constants", "exponent tables, blow-up time, slicing and smallness");
  k_cmd->add_option("--N", k_f.N, "space dimension");
  k_cmd->add_option("--theta", k_f.theta, "growth exponent");
  k_cmd->add_option("--q", k_f.q, "integrability of f");
  k_cmd->add_option("--r", k_f.r, "integrability of E, or inf");
  k_cmd->add_option("--mu", k_f.mu, "integrability of u0");
  k_cmd->add_option("--m", k_f.m, "target exponent of the decay estimate");
  k_cmd->add_option("--C", k_f.C, "assumed constant of the smallness condition");
  k_cmd->add_option("--C-mu", k_f.C_mu, "assumed constant of the blow-up ODE");
  k_cmd->add_option("--u0-norm", k_f.norm_u0, "size of u0");
  k_cmd->add_option("--E-norm", k_f.norm_E, "size of E");
  k_cmd->add_option("--f-norm", k_f.norm_f, "size of f");
  k_cmd->add_option("--M0", k_f.M0, "mass bound");
  k_cmd->add_option("--A", k_f.A, "assumed slicing constant");
  k_cmd->add_option("--T", k_f.T, "horizon");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalidConfig;
  }

  const std::string command = command_line(argc, argv);
  try {
    if (*run_cmd) return cmd_run(run_f, command);
    if (*sweep_cmd) return cmd_sweep(sweep_f, command);
    if (*regime_cmd) return cmd_regime(regime_f);
    if (*diag_cmd) return cmd_diagnose(diag_f);
    if (*con_cmd) return cmd_contraction(con_f);
    if (*fp_cmd) return cmd_fixedpoint(fp_f);
    if (*k_cmd) return cmd_constants(k_f);
  } catch (const ConfigError& e) {
    std::cerr << "invalid configuration: " << e.what() << "\n";
    return kInvalidConfig;
  } catch (const ModelError& e) {
    std::cerr << "invalid configuration: " << e.what() << "\n";
    return kInvalidConfig;
  } catch (const RegimeError& e) {
    std::cerr << "invalid configuration: " << e.what() << "\n";
    return kInvalidConfig;
  } catch (const SolverError& e) {
    std::cerr << "solver failure at step " << e.step() << ": " << e.what() << "\n";
    return kSolverFailure;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid configuration: " << e.what() << "\n";
    return kInvalidConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kSolverFailure;
  }
  return kOk;
}
