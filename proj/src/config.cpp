#include "superdrift/config.hpp"

#include "superdrift/field_io.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

namespace superdrift {

using nlohmann::json;

namespace {

template <typename T>
T get_as(const json& doc, const char* key, const T& fallback) {
  if (!doc.contains(key) || doc.at(key).is_null()) return fallback;
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

void reject_unknown(const json& doc, const std::set<std::string>& known, const std::string& where) {
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (!known.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
  }
}

// reg_n: number, "inf" or null for the unregularized nonlinearity.
std::optional<double> parse_reg_n(const json& doc, std::optional<double> fallback) {
  if (!doc.contains("reg_n")) return fallback;
  const json& v = doc.at("reg_n");
  if (v.is_null()) return std::nullopt;
  if (v.is_string()) {
    if (v.get<std::string>() == "inf") return std::nullopt;
    throw ConfigError("reg_n must be a number or \"inf\"");
  }
  if (!v.is_number()) throw ConfigError("reg_n must be a number or \"inf\"");
  return v.get<double>();
}

}  // namespace

RunConfig parse_run_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("configuration must be a JSON object");
  reject_unknown(doc,
                 {"dim", "extents", "cells", "preset", "theta", "reg_n", "form", "alpha", "beta", "horizon", "mass",
                  "width", "E_form", "f_form", "M_form", "u0_form", "solver", "constants"},
                 "configuration");
  RunConfig cfg;
  ProblemConfig& p = cfg.problem;
  p.dim = get_as<int>(doc, "dim", p.dim);
  p.preset = get_as<std::string>(doc, "preset", p.preset);
  // The kq model is a three-dimensional condensation prototype.
  if (!doc.contains("dim") && p.preset == "kq") p.dim = 3;
  p.extents = get_as<std::vector<double>>(doc, "extents", p.extents);
  p.cells = get_as<std::vector<int>>(doc, "cells", p.cells);
  p.theta = get_as<double>(doc, "theta", p.theta);
  p.reg_n = parse_reg_n(doc, p.reg_n);
  p.form = get_as<std::string>(doc, "form", p.form);
  p.alpha = get_as<double>(doc, "alpha", p.alpha);
  p.beta = get_as<double>(doc, "beta", p.beta);
  p.horizon = get_as<double>(doc, "horizon", p.horizon);
  p.mass = get_as<double>(doc, "mass", p.mass);
  p.width = get_as<double>(doc, "width", p.width);
  p.E_form = get_as<std::string>(doc, "E_form", p.E_form);
  p.f_form = get_as<std::string>(doc, "f_form", p.f_form);
  p.M_form = get_as<std::string>(doc, "M_form", p.M_form);
  p.u0_form = get_as<std::string>(doc, "u0_form", p.u0_form);

  bool growth_given = false;
  if (doc.contains("solver")) {
    const json& s = doc.at("solver");
    if (!s.is_object()) throw ConfigError("'solver' must be an object");
    reject_unknown(s,
                   {"dt_policy", "dt", "safety", "dt_max", "lin_tol", "cap_linf", "growth_cap", "dt_min", "stride",
                    "keep_snapshots", "norm_m", "max_steps"},
                   "solver");
    SolverConfig& c = cfg.solver;
    const std::string policy = get_as<std::string>(s, "dt_policy", "adaptive");
    if (policy == "adaptive") {
      c.dt_policy = DtPolicy::Adaptive;
    } else if (policy == "fixed") {
      c.dt_policy = DtPolicy::Fixed;
    } else {
      throw ConfigError("dt_policy must be \"fixed\" or \"adaptive\"");
    }
    c.dt = get_as<double>(s, "dt", c.dt);
    c.safety = get_as<double>(s, "safety", c.safety);
    c.dt_max = get_as<double>(s, "dt_max", c.dt_max);
    c.lin_tol = get_as<double>(s, "lin_tol", c.lin_tol);
    c.cap_linf = get_as<double>(s, "cap_linf", c.cap_linf);
    growth_given = s.contains("growth_cap");
    c.growth_cap = get_as<double>(s, "growth_cap", c.growth_cap);
    c.dt_min = get_as<double>(s, "dt_min", c.dt_min);
    c.stride = get_as<int>(s, "stride", c.stride);
    c.keep_snapshots = get_as<bool>(s, "keep_snapshots", c.keep_snapshots);
    c.norm_m = get_as<double>(s, "norm_m", c.norm_m);
    c.max_steps = get_as<long>(s, "max_steps", c.max_steps);
  }
  if (doc.contains("constants")) {
    const json& s = doc.at("constants");
    if (!s.is_object()) throw ConfigError("'constants' must be an object");
    reject_unknown(s, {"alpha", "beta", "S", "C_GN", "C_alpha_q", "A_const"}, "constants");
    ConstantsConfig& k = cfg.constants;
    k.S = get_as<double>(s, "S", k.S);
    if (s.contains("C_GN") && !s.at("C_GN").is_null()) k.C_GN = get_as<double>(s, "C_GN", 0.0);
    k.C_alpha_q = get_as<double>(s, "C_alpha_q", k.C_alpha_q);
    k.A_const = get_as<double>(s, "A_const", k.A_const);
  }
  cfg.constants.alpha = p.alpha;
  cfg.constants.beta = p.beta;
  apply_preset_defaults(cfg, growth_given);
  try {
    cfg.solver.validate();
    cfg.constants.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

void apply_preset_defaults(RunConfig& config, bool growth_cap_given) {
  if (config.problem.preset == "kq" && !growth_cap_given) config.solver.growth_cap = 10.0;
}

RunConfig load_run_config(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("cannot parse " + path + ": " + e.what());
  }
  return parse_run_config(doc);
}

json to_json(const RunConfig& config) {
  const ProblemConfig& p = config.problem;
  json doc;
  doc["dim"] = p.dim;
  doc["extents"] = p.extents;
  doc["cells"] = p.cells;
  doc["preset"] = p.preset;
  doc["theta"] = p.theta;
  doc["reg_n"] = p.reg_n ? json(*p.reg_n) : json("inf");
  doc["form"] = p.form;
  doc["alpha"] = p.alpha;
  doc["beta"] = p.beta;
  doc["horizon"] = p.horizon;
  doc["mass"] = p.mass;
  doc["width"] = p.width;
  doc["E_form"] = p.E_form;
  doc["f_form"] = p.f_form;
  doc["M_form"] = p.M_form;
  doc["u0_form"] = p.u0_form;
  const SolverConfig& s = config.solver;
  doc["solver"] = {{"dt_policy", s.dt_policy == DtPolicy::Fixed ? "fixed" : "adaptive"},
                   {"dt", s.dt},
                   {"safety", s.safety},
                   {"dt_max", s.dt_max},
                   {"lin_tol", s.lin_tol},
                   {"cap_linf", s.cap_linf},
                   {"growth_cap", s.growth_cap},
                   {"dt_min", s.dt_min},
                   {"stride", s.stride},
                   {"keep_snapshots", s.keep_snapshots},
                   {"norm_m", s.norm_m},
                   {"max_steps", s.max_steps}};
  const ConstantsConfig& k = config.constants;
  doc["constants"] = {{"S", k.S},
                      {"C_GN", k.C_GN ? json(*k.C_GN) : json(nullptr)},
                      {"C_alpha_q", k.C_alpha_q},
                      {"A_const", k.A_const}};
  return doc;
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const json& resolved) {
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(resolved.dump());
  return out.str();
}

}  // namespace superdrift
