#ifndef SUPERDRIFT_DIAGNOSTICS_HPP
#define SUPERDRIFT_DIAGNOSTICS_HPP

#include "superdrift/estimates.hpp"
#include "superdrift/fv_solver.hpp"

#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace superdrift {

/// Constants the estimates leave unnamed. Outputs that depend on them are
/// relative to these assumed values.
struct ConstantsConfig {
  double alpha = 1.0;
  double beta = 1.0;
  double S = 1.0;                ///< Sobolev constant
  std::optional<double> C_GN;    ///< empty: twice the empirical maximum on the run grid
  double C_alpha_q = 1.0;
  double A_const = 1.0;

  void validate() const;
};

struct CheckResult {
  bool applicable = true;
  bool ok = true;
  double worst_slack = std::numeric_limits<double>::infinity();  ///< allowed minus observed
  double worst_time = 0.0;

  void observe(double slack, double t);
};

struct DiffIneqCheck {
  double m = 2.0;
  CheckResult result;
  std::vector<double> t;
  std::vector<double> lhs;  ///< centered difference of the integral of |u|^m
  std::vector<double> rhs;
};

struct DiagnosticsOptions {
  std::vector<double> m_values{2.0};
  double mass_rel_tol = 1e-8;
  double diff_rel_tol = 0.05;
  double diff_abs_tol = 1e-10;
  bool fit_decay = true;
  double decay_mu = 1.0;
  double decay_m = 2.0;
  int gn_samples = 200;
  unsigned long long gn_seed = 7;
};

struct DiagnosticsReport {
  double M0 = 0.0;
  CheckResult mass_bound;
  std::vector<double> mass_slack;  ///< per norm record, NaN where not finite
  CheckResult l1_monotone;  ///< applicable only for f = 0 and u0 >= 0
  CheckResult superlevel;
  std::vector<DiffIneqCheck> diff_ineq;
  CheckResult gn;
  double gn_ratio = 0.0;
  double C_GN = 0.0;
  std::optional<DecayFit> decay_fit;
  double drift_flux_l2 = 0.0;

  bool all_ok() const;
};

DiagnosticsReport run_diagnostics(const Trajectory& trajectory, const ProblemSpec& problem,
                                  const ConstantsConfig& constants, const DiagnosticsOptions& options = {});

/// Per-time slack table: t, mass slack, then one differential-inequality
/// slack column per exponent (empty where not evaluated).
std::string diagnostics_to_csv(const Trajectory& trajectory, const DiagnosticsReport& report);

/// Space-time ratio int |phi|^sigma / ((sup_t int phi^2)^{2/N} int int |grad phi|^2)
/// over equally weighted snapshots, with the scheme's Dirichlet gradient.
double gn_ratio(const std::vector<Field>& snapshots, const std::vector<double>& weights);
double gn_ratio(const SpaceTimeSeries& series);

/// Largest ratio over seeded random band-limited sine-mode space-time fields.
double gn_max_ratio(const Grid& grid, int samples, unsigned long long seed, int max_mode = 3);

struct GradientLevelRow {
  double lambda = 0.0;
  double k = 0.0;              ///< lambda^{N/(N+1)}
  double grad_measure = 0.0;   ///< |{|grad u| > lambda}|
  double above_k = 0.0;        ///< |{|u| > k}|
  double grad_below_k = 0.0;   ///< |{|grad u| > lambda, |u| <= k}|
};

/// Space-time splitting of the gradient superlevel sets at the given levels.
std::vector<GradientLevelRow> gradient_level_decomposition(const SpaceTimeSeries& series,
                                                           const std::vector<double>& lambdas);

}  // namespace superdrift

#endif  // SUPERDRIFT_DIAGNOSTICS_HPP
