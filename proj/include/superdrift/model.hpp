#ifndef SUPERDRIFT_MODEL_HPP
#define SUPERDRIFT_MODEL_HPP

#include "superdrift/field.hpp"
#include "superdrift/grid.hpp"

#include <Eigen/Core>

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace superdrift {

enum class NonlinearityForm { Power, KQ };

/// Drift nonlinearity h and its saturated regularization g_n.
///
/// Power form: h(s) = |s|^theta s, g_n(s) = h(s) / (1 + |s|^(theta+1) / n).
/// KQ form:    h(s) = s (1 + |s|),  g_n(s) = h(s) / (1 + s^2 / n).
/// An empty reg_n means n = infinity, i.e. g_n = h.
struct Nonlinearity {
  double theta = 1.0;
  std::optional<double> reg_n = 1e6;
  NonlinearityForm form = NonlinearityForm::Power;

  double operator()(double s) const;

  /// Upper bound of |g_n'| on [-sup_abs, sup_abs].
  double lipschitz_bound(double sup_abs) const;

  void validate() const;
};

inline double g_eval(double s, const Nonlinearity& nl) { return nl(s); }

std::string to_string(NonlinearityForm form);
NonlinearityForm parse_form(const std::string& name);

/// Scalar space-time coefficient: tabulated per cell or a closed form sampled
/// at cell centers.
struct ScalarCoefficient {
  std::string name = "zero";
  std::function<double(double, const Grid::Point&)> fn;
  std::optional<Eigen::VectorXd> table;
  bool time_dependent = false;

  Eigen::VectorXd sample(const Grid& grid, double t) const;
  bool is_zero() const { return name == "zero"; }

  static ScalarCoefficient zero();
  static ScalarCoefficient constant(double c);
  static ScalarCoefficient tabulated(Eigen::VectorXd values, std::string name = "table");
  static ScalarCoefficient closed_form(std::string name, std::function<double(double, const Grid::Point&)> fn,
                                       bool time_dependent);
};

/// Vector coefficient E; samples are (cells x dim).
struct VectorCoefficient {
  std::string name = "zero";
  std::function<Grid::Point(double, const Grid::Point&)> fn;
  std::optional<Eigen::MatrixXd> table;
  bool time_dependent = false;

  Eigen::MatrixXd sample(const Grid& grid, double t) const;
  bool is_zero() const { return name == "zero"; }

  static VectorCoefficient zero();
  static VectorCoefficient constant(const std::vector<double>& c);
  static VectorCoefficient tabulated(Eigen::MatrixXd values, std::string name = "table");
  static VectorCoefficient closed_form(std::string name, std::function<Grid::Point(double, const Grid::Point&)> fn,
                                       bool time_dependent);
};

struct CoefficientSet {
  Eigen::MatrixXd M;  ///< diagonal diffusivity, (cells x dim)
  VectorCoefficient E;
  ScalarCoefficient f;
  Field u0;
  double alpha = 1.0;
  double beta = 1.0;
};

struct ProblemSpec {
  Grid grid;
  CoefficientSet coefficients;
  Nonlinearity nonlinearity;
  double horizon = 1.0;
  std::string preset = "custom";
};

/// Flat description of a problem, the in-memory form of the configuration
/// file. Empty strings and vectors fall back to preset defaults.
struct ProblemConfig {
  int dim = 1;
  std::vector<double> extents;
  std::vector<int> cells;
  std::string preset = "heat";
  double theta = 1.0;
  std::optional<double> reg_n = 1e6;
  std::string form;
  double alpha = 1.0;
  double beta = 1.0;
  double horizon = 0.1;
  double mass = 1.0;
  double width = 0.0;
  std::string E_form;
  std::string f_form;
  std::string M_form;
  std::string u0_form;
};

class ModelError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Checks ellipticity alpha <= M <= beta, finiteness of E and f at t = 0,
/// grid agreement of u0 and a positive horizon. Throws ModelError.
void validate(const ProblemSpec& spec);

ProblemSpec make_problem(const ProblemConfig& config);

/// Preset shortcut; the remaining keys keep their defaults.
ProblemSpec make_problem(const std::string& preset, int dim, int cells_per_axis, double horizon, double mass = 1.0);

/// Cell-sampled Gaussian rescaled to the given discrete mass.
Field gaussian_bump(const Grid& grid, double mass, double width, const Grid::Point& center);

/// Product of sin(pi x_a / L_a), rescaled to the given discrete mass.
Field sine_mode(const Grid& grid, double mass);

VectorCoefficient parse_vector_form(const std::string& spec, const Grid& grid);
ScalarCoefficient parse_scalar_form(const std::string& spec, const Grid& grid);
Eigen::MatrixXd parse_diffusivity_form(const std::string& spec, const Grid& grid);

/// Diffusivity with every diagonal entry drawn uniformly in [lo, hi].
Eigen::MatrixXd random_diffusivity(const Grid& grid, double lo, double hi, unsigned long long seed);

}  // namespace superdrift

#endif  // SUPERDRIFT_MODEL_HPP
