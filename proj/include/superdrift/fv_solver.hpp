#ifndef SUPERDRIFT_FV_SOLVER_HPP
#define SUPERDRIFT_FV_SOLVER_HPP

#include "superdrift/field.hpp"
#include "superdrift/field_io.hpp"
#include "superdrift/model.hpp"

#include <Eigen/Sparse>

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace superdrift {

/// Volume-integrated two-point-flux stencil of -div(M grad .) with zero
/// Dirichlet faces. (A u)_i is the net diffusive outflow of cell i, so the
/// per-volume operator is A / cell_volume.
struct DiffusionOperator {
  Grid grid;
  Eigen::SparseMatrix<double> A;
};

DiffusionOperator assemble_diffusion(const Grid& grid, const Eigen::MatrixXd& M);

/// Discrete div(-E g(u)) per unit volume, first-order upwind.
///
/// The transport velocity of div(E h(u)) is -E, so a face flux is
/// (-E . n) g(u_up) with u_up taken on the side the velocity -E comes from.
/// E at a face is the mean of the two adjacent cell samples; boundary faces
/// use the cell sample, with the exterior value 0.
Field drift_divergence(const Grid& grid, const Eigen::MatrixXd& E, const Field& u, const Nonlinearity& nl);

/// Largest outflow rate sum_faces max(0, -E . n) area / volume over cells.
double max_outflow_rate(const Grid& grid, const Eigen::MatrixXd& E);

/// Monotone step bound safety / (L_g(|u|_inf) * max outflow rate); returns
/// dt_cap when the drift or the field vanishes.
double cfl_dt(const Field& u, const Eigen::MatrixXd& E, const Nonlinearity& nl, const Grid& grid, double safety,
              double dt_cap);

enum class DtPolicy { Fixed, Adaptive };

struct SolverConfig {
  DtPolicy dt_policy = DtPolicy::Adaptive;
  double dt = 0.0;       ///< fixed step (Fixed policy)
  double safety = 0.9;   ///< CFL safety factor (Adaptive policy)
  double dt_max = 0.0;   ///< step ceiling; 0 means horizon / 200
  double lin_tol = 1e-12;
  double cap_linf = 1e8;
  double growth_cap = 0.0;  ///< blow-up when sup norm exceeds this multiple of the initial one; 0 disables
  double dt_min = 1e-10;
  int stride = 1;           ///< snapshot stride in steps
  bool keep_snapshots = true;
  double norm_m = 2.0;      ///< exponent of the Lm column
  long max_steps = 10000000;

  void validate() const;
  double dt_ceiling(double horizon) const { return dt_max > 0.0 ? dt_max : horizon / 200.0; }
};

struct StepReport {
  double t = 0.0;  ///< time reached by the step
  double dt = 0.0;
  int lin_iters = 0;
  double lin_residual = 0.0;
  double cfl_dt = 0.0;
  double rhs_l1 = 0.0;  ///< L1 norm of the per-volume right-hand side, for tolerance budgets
  bool blown_up = false;
};

enum class RunStatus { Completed, BlowUpSuspected, SolverFailure };

std::string to_string(RunStatus status);

struct Trajectory {
  SpaceTimeSeries series;
  NormSeries norms;
  RunStatus status = RunStatus::Completed;
  std::vector<StepReport> steps;
  std::string message;

  double final_time() const { return norms.records.empty() ? 0.0 : norms.records.back().t; }
};

class SolverError : public std::runtime_error {
public:
  SolverError(const std::string& what, long step) : std::runtime_error(what), step_(step) {}
  long step() const { return step_; }

private:
  long step_;
};

/// IMEX stepper bound to one problem: backward Euler for diffusion, explicit
/// upwind drift, source T_n(f) at the new time level. Solves
/// (vol I + dt A) u_next = vol (u - dt D(w) + dt T_n(f)),
/// where D is evaluated at the drift argument w (w = u for the nonlinear scheme).
class Stepper {
public:
  Stepper(const ProblemSpec& problem, const SolverConfig& config);

  const ProblemSpec& problem() const { return problem_; }
  const SolverConfig& config() const { return config_; }
  const DiffusionOperator& diffusion() const { return op_; }

  Eigen::MatrixXd drift_at(double t) const;
  Eigen::VectorXd source_at(double t) const;

  double cfl(const Field& u, double t) const;

  /// Advances u from t to t + dt in place. Throws SolverError when CG fails.
  StepReport advance(Field& u, double t, double dt, long step_index = 0) const;
  StepReport advance(Field& u, const Field& drift_argument, double t, double dt, long step_index = 0) const;

private:
  ProblemSpec problem_;
  SolverConfig config_;
  DiffusionOperator op_;
  Eigen::MatrixXd E_frozen_;
  Eigen::VectorXd f_frozen_;
};

/// One step from t = 0.
std::pair<Field, StepReport> step(const Field& u, double dt, const ProblemSpec& problem, const SolverConfig& config,
                                  double t = 0.0);

/// Initial datum T_n(u0) of the approximating problem.
Field initial_datum(const ProblemSpec& problem);

Trajectory run(const ProblemSpec& problem, const SolverConfig& config);

/// Space-time L2 norm of |E| g_n(u) over the recorded snapshots.
double drift_flux_l2(const Trajectory& trajectory, const ProblemSpec& problem);

}  // namespace superdrift

#endif  // SUPERDRIFT_FV_SOLVER_HPP
