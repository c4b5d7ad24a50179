#ifndef SUPERDRIFT_CONFIG_HPP
#define SUPERDRIFT_CONFIG_HPP

#include "superdrift/diagnostics.hpp"
#include "superdrift/fv_solver.hpp"
#include "superdrift/model.hpp"

#include <json.hpp>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace superdrift {

class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Problem, solver and constants sections of one configuration document.
struct RunConfig {
  ProblemConfig problem;
  SolverConfig solver;
  ConstantsConfig constants;
};

/// Reads a JSON object; unknown keys are rejected. Problem keys live at the
/// top level, solver keys under "solver", constants under "constants".
RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::string& path);

/// Fully resolved configuration with every default spelled out.
nlohmann::json to_json(const RunConfig& config);

/// FNV-1a 64-bit hash of the canonical serialization, as 16 hex digits.
std::string config_hash(const nlohmann::json& resolved);
std::uint64_t fnv1a64(const std::string& bytes);

/// Preset-dependent solver defaults (the kq preset flags 10x sup-norm growth).
void apply_preset_defaults(RunConfig& config, bool growth_cap_given);

}  // namespace superdrift

#endif  // SUPERDRIFT_CONFIG_HPP
