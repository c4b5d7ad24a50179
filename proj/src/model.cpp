#include "superdrift/model.hpp"

#include "superdrift/field_io.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace superdrift {

namespace {

std::vector<double> parse_numbers(const std::string& text, const std::string& context) {
  std::vector<double> out;
  if (text.empty()) return out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ModelError("bad number '" + item + "' in " + context);
    }
  }
  return out;
}

// Splits "kind:args" into kind and numeric args.
std::pair<std::string, std::string> split_form(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) return {spec, ""};
  return {spec.substr(0, colon), spec.substr(colon + 1)};
}

void require_count(const std::vector<double>& args, std::size_t lo, std::size_t hi, const std::string& spec) {
  if (args.size() < lo || args.size() > hi) throw ModelError("wrong number of arguments in '" + spec + "'");
}

double default_extent(const std::string& preset) { return preset == "kq" ? 2.0 : 1.0; }

int default_cells(const std::string& preset, int dim) {
  if (preset == "kq") return dim == 3 ? 24 : 48;
  return dim == 3 ? 24 : (dim == 2 ? 48 : 64);
}

double default_width(const std::string& preset, const Grid& grid) {
  if (preset == "kq") return 0.5;
  double lmin = grid.extent(0);
  for (int a = 1; a < grid.dim(); ++a) lmin = std::min(lmin, grid.extent(a));
  return 0.1 * lmin;
}

}  // namespace

double Nonlinearity::operator()(double s) const {
  const double a = std::abs(s);
  if (a == 0.0) return 0.0;
  if (form == NonlinearityForm::Power) {
    const double grow = theta == 0.0 ? a : std::pow(a, theta + 1.0);
    const double h = std::copysign(grow, s);
    return reg_n ? h / (1.0 + grow / *reg_n) : h;
  }
  const double h = s * (1.0 + a);
  return reg_n ? h / (1.0 + s * s / *reg_n) : h;
}

double Nonlinearity::lipschitz_bound(double sup_abs) const {
  const double u = std::abs(sup_abs);
  if (form == NonlinearityForm::Power) return theta == 0.0 ? 1.0 : (theta + 1.0) * std::pow(u, theta);
  return 1.0 + 2.0 * u;
}

void Nonlinearity::validate() const {
  if (!std::isfinite(theta) || theta < 0.0) throw ModelError("theta must be finite and >= 0");
  if (reg_n && !(*reg_n > 0.0)) throw ModelError("regularization level n must be positive");
  if (form == NonlinearityForm::KQ && theta != 1.0) throw ModelError("the kq nonlinearity has theta = 1");
}

std::string to_string(NonlinearityForm form) { return form == NonlinearityForm::Power ? "power" : "kq"; }

NonlinearityForm parse_form(const std::string& name) {
  if (name == "power") return NonlinearityForm::Power;
  if (name == "kq") return NonlinearityForm::KQ;
  throw ModelError("unknown nonlinearity form '" + name + "'");
}

Eigen::VectorXd ScalarCoefficient::sample(const Grid& grid, double t) const {
  if (table) {
    if (static_cast<std::size_t>(table->size()) != grid.size()) throw ModelError("tabulated f does not match grid");
    return *table;
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size()));
  if (!fn) return out;
  for (std::size_t i = 0; i < grid.size(); ++i) out[static_cast<Eigen::Index>(i)] = fn(t, grid.cell_center(i));
  return out;
}

ScalarCoefficient ScalarCoefficient::zero() { return {}; }

ScalarCoefficient ScalarCoefficient::constant(double c) {
  if (c == 0.0) return zero();
  std::ostringstream name;
  name << "constant:" << c;
  return closed_form(name.str(), [c](double, const Grid::Point&) { return c; }, false);
}

ScalarCoefficient ScalarCoefficient::tabulated(Eigen::VectorXd values, std::string name) {
  ScalarCoefficient out;
  out.name = std::move(name);
  out.table = std::move(values);
  return out;
}

ScalarCoefficient ScalarCoefficient::closed_form(std::string name, std::function<double(double, const Grid::Point&)> fn,
                                                 bool time_dependent) {
  ScalarCoefficient out;
  out.name = std::move(name);
  out.fn = std::move(fn);
  out.time_dependent = time_dependent;
  return out;
}

Eigen::MatrixXd VectorCoefficient::sample(const Grid& grid, double t) const {
  const auto n = static_cast<Eigen::Index>(grid.size());
  if (table) {
    if (table->rows() != n || table->cols() != grid.dim()) throw ModelError("tabulated E does not match grid");
    return *table;
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, grid.dim());
  if (!fn) return out;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Grid::Point v = fn(t, grid.cell_center(static_cast<std::size_t>(i)));
    for (int a = 0; a < grid.dim(); ++a) out(i, a) = v[a];
  }
  return out;
}

VectorCoefficient VectorCoefficient::zero() { return {}; }

VectorCoefficient VectorCoefficient::constant(const std::vector<double>& c) {
  Grid::Point v = Grid::Point::Zero();
  std::ostringstream name;
  name << "constant:";
  for (std::size_t a = 0; a < c.size() && a < 3; ++a) {
    v[static_cast<Eigen::Index>(a)] = c[a];
    name << (a ? "," : "") << c[a];
  }
  if (v.isZero(0.0)) return zero();
  return closed_form(name.str(), [v](double, const Grid::Point&) { return v; }, false);
}

VectorCoefficient VectorCoefficient::tabulated(Eigen::MatrixXd values, std::string name) {
  VectorCoefficient out;
  out.name = std::move(name);
  out.table = std::move(values);
  return out;
}

VectorCoefficient VectorCoefficient::closed_form(std::string name,
                                                 std::function<Grid::Point(double, const Grid::Point&)> fn,
                                                 bool time_dependent) {
  VectorCoefficient out;
  out.name = std::move(name);
  out.fn = std::move(fn);
  out.time_dependent = time_dependent;
  return out;
}

void validate(const ProblemSpec& spec) {
  const Grid& grid = spec.grid;
  if (grid.size() == 0) throw ModelError("problem has no grid");
  if (!(spec.horizon > 0.0) || !std::isfinite(spec.horizon)) throw ModelError("horizon must be positive");
  spec.nonlinearity.validate();
  const auto& c = spec.coefficients;
  if (!(c.alpha > 0.0) || !(c.alpha <= c.beta)) throw ModelError("ellipticity bounds need 0 < alpha <= beta");
  if (c.M.rows() != static_cast<Eigen::Index>(grid.size()) || c.M.cols() != grid.dim()) {
    throw ModelError("diffusivity must have one row per cell and one column per axis");
  }
  if (!c.M.allFinite() || c.M.minCoeff() < c.alpha || c.M.maxCoeff() > c.beta) {
    throw ModelError("diffusivity violates alpha <= M <= beta");
  }
  if (!c.E.sample(grid, 0.0).allFinite()) throw ModelError("drift coefficient E is not finite");
  if (!c.f.sample(grid, 0.0).allFinite()) throw ModelError("source f is not finite");
  if (c.u0.grid() != grid) throw ModelError("u0 is not defined on the problem grid");
  if (!c.u0.all_finite()) throw ModelError("u0 is not finite");
}

Field gaussian_bump(const Grid& grid, double mass, double width, const Grid::Point& center) {
  if (!(width > 0.0)) throw ModelError("Gaussian width must be positive");
  const int dim = grid.dim();
  Field u = Field::from_function(grid, [&](const Grid::Point& x) {
    const double r2 = (x - center).head(dim).squaredNorm();
    return std::exp(-0.5 * r2 / (width * width));
  });
  const double total = integral(u);
  if (!(total > 0.0)) throw ModelError("Gaussian bump underflows on this grid");
  u.values() *= mass / total;
  return u;
}

Field sine_mode(const Grid& grid, double mass) {
  Field u = Field::from_function(grid, [&](const Grid::Point& x) {
    double v = 1.0;
    for (int a = 0; a < grid.dim(); ++a) v *= std::sin(M_PI * x[a] / grid.extent(a));
    return v;
  });
  u.values() *= mass / integral(u);
  return u;
}

Eigen::MatrixXd random_diffusivity(const Grid& grid, double lo, double hi, unsigned long long seed) {
  if (!(lo > 0.0) || !(lo <= hi)) throw ModelError("random diffusivity needs 0 < lo <= hi");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  Eigen::MatrixXd M(static_cast<Eigen::Index>(grid.size()), grid.dim());
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index a = 0; a < M.cols(); ++a) M(i, a) = dist(rng);
  }
  return M;
}

VectorCoefficient parse_vector_form(const std::string& spec, const Grid& grid) {
  const auto [kind, rest] = split_form(spec);
  const Grid::Point c = grid.center();
  const int dim = grid.dim();
  if (kind.empty() || kind == "zero") return VectorCoefficient::zero();
  if (kind == "identity") {
    return VectorCoefficient::closed_form(
        "identity", [c](double, const Grid::Point& x) { return Grid::Point(x - c); }, false);
  }
  if (kind == "constant") {
    const auto args = parse_numbers(rest, spec);
    require_count(args, 1, static_cast<std::size_t>(dim), spec);
    return VectorCoefficient::constant(args);
  }
  if (kind == "swirl") {
    if (dim < 2) throw ModelError("swirl drift needs at least two dimensions");
    const auto args = parse_numbers(rest, spec);
    require_count(args, 1, 1, spec);
    const double s = args[0];
    return VectorCoefficient::closed_form(
        spec,
        [c, s](double, const Grid::Point& x) {
          return Grid::Point(-s * (x[1] - c[1]), s * (x[0] - c[0]), 0.0);
        },
        false);
  }
  if (kind == "pulsating") {
    const auto args = parse_numbers(rest, spec);
    require_count(args, 2, 2, spec);
    const double a = args[0], omega = args[1];
    return VectorCoefficient::closed_form(
        spec, [c, a, omega](double t, const Grid::Point& x) { return Grid::Point(a * std::cos(omega * t) * (x - c)); },
        true);
  }
  if (kind == "csv") {
    Eigen::MatrixXd table = read_table_csv(rest);
    if (table.cols() != dim) throw ModelError("E table needs one column per axis");
    return VectorCoefficient::tabulated(std::move(table), spec);
  }
  throw ModelError("unknown E form '" + spec + "'");
}

ScalarCoefficient parse_scalar_form(const std::string& spec, const Grid& grid) {
  const auto [kind, rest] = split_form(spec);
  if (kind.empty() || kind == "zero") return ScalarCoefficient::zero();
  if (kind == "constant") {
    const auto args = parse_numbers(rest, spec);
    require_count(args, 1, 1, spec);
    return ScalarCoefficient::constant(args[0]);
  }
  if (kind == "gaussian") {
    const auto args = parse_numbers(rest, spec);
    require_count(args, 2, 2, spec);
    const double amp = args[0], w = args[1];
    if (!(w > 0.0)) throw ModelError("source width must be positive");
    const Grid::Point c = grid.center();
    const int dim = grid.dim();
    return ScalarCoefficient::closed_form(
        spec,
        [c, amp, w, dim](double, const Grid::Point& x) {
          return amp * std::exp(-0.5 * (x - c).head(dim).squaredNorm() / (w * w));
        },
        false);
  }
  if (kind == "pulse") {
    const auto args = parse_numbers(rest, spec);
    require_count(args, 2, 2, spec);
    const double amp = args[0], t_end = args[1];
    return ScalarCoefficient::closed_form(
        spec, [amp, t_end](double t, const Grid::Point&) { return t <= t_end ? amp : 0.0; }, true);
  }
  if (kind == "csv") {
    Eigen::MatrixXd table = read_table_csv(rest);
    if (table.cols() != 1) throw ModelError("scalar table needs exactly one value column");
    return ScalarCoefficient::tabulated(table.col(0), spec);
  }
  throw ModelError("unknown scalar form '" + spec + "'");
}

Eigen::MatrixXd parse_diffusivity_form(const std::string& spec, const Grid& grid) {
  const auto [kind, rest] = split_form(spec);
  const auto n = static_cast<Eigen::Index>(grid.size());
  if (kind.empty() || kind == "identity") return Eigen::MatrixXd::Ones(n, grid.dim());
  if (kind == "constant") {
    const auto args = parse_numbers(rest, spec);
    require_count(args, 1, static_cast<std::size_t>(grid.dim()), spec);
    Eigen::MatrixXd M(n, grid.dim());
    for (int a = 0; a < grid.dim(); ++a) M.col(a).setConstant(args.size() == 1 ? args[0] : args[a]);
    return M;
  }
  if (kind == "random") {
    const auto args = parse_numbers(rest, spec);
    require_count(args, 3, 3, spec);
    return random_diffusivity(grid, args[0], args[1], static_cast<unsigned long long>(args[2]));
  }
  if (kind == "csv") {
    Eigen::MatrixXd table = read_table_csv(rest);
    if (table.cols() != grid.dim()) throw ModelError("M table needs one column per axis");
    return table;
  }
  throw ModelError("unknown M form '" + spec + "'");
}

ProblemSpec make_problem(const ProblemConfig& config) {
  const std::string& preset = config.preset;
  if (preset != "heat" && preset != "power-drift" && preset != "kq" && preset != "custom") {
    throw ModelError("unknown preset '" + preset + "'");
  }
  if (config.dim < 1 || config.dim > Grid::kMaxDim) throw ModelError("dim must be 1, 2 or 3");

  std::vector<double> extents = config.extents;
  if (extents.empty()) extents.assign(config.dim, default_extent(preset));
  if (extents.size() == 1 && config.dim > 1) extents.assign(config.dim, extents[0]);
  std::vector<int> cells = config.cells;
  if (cells.empty()) cells.assign(config.dim, default_cells(preset, config.dim));
  if (cells.size() == 1 && config.dim > 1) cells.assign(config.dim, cells[0]);

  ProblemSpec spec;
  try {
    spec.grid = Grid(config.dim, extents, cells);
  } catch (const std::invalid_argument& e) {
    throw ModelError(e.what());
  }
  const Grid& grid = spec.grid;
  spec.preset = preset;
  spec.horizon = config.horizon;

  spec.nonlinearity.theta = preset == "kq" ? 1.0 : config.theta;
  spec.nonlinearity.reg_n = config.reg_n;
  std::string form = config.form;
  if (form.empty()) form = preset == "kq" ? "kq" : "power";
  spec.nonlinearity.form = parse_form(form);

  auto& c = spec.coefficients;
  c.alpha = config.alpha;
  c.beta = config.beta;
  c.M = parse_diffusivity_form(config.M_form, grid);

  std::string E_form = config.E_form;
  if (E_form.empty()) E_form = (preset == "kq" || preset == "power-drift") ? "identity" : "zero";
  if (preset == "heat" && E_form != "zero") throw ModelError("the heat preset has E = 0");
  c.E = parse_vector_form(E_form, grid);
  c.f = parse_scalar_form(config.f_form, grid);

  const double width = config.width > 0.0 ? config.width : default_width(preset, grid);
  const auto [u0_kind, u0_rest] = split_form(config.u0_form);
  if (u0_kind.empty() || u0_kind == "gaussian") {
    c.u0 = gaussian_bump(grid, config.mass, width, grid.center());
  } else if (u0_kind == "sine") {
    c.u0 = sine_mode(grid, config.mass);
  } else if (u0_kind == "constant") {
    const auto args = parse_numbers(u0_rest, config.u0_form);
    require_count(args, 1, 1, config.u0_form);
    c.u0 = Field(grid, Eigen::VectorXd::Constant(static_cast<Eigen::Index>(grid.size()), args[0]));
  } else if (u0_kind == "csv") {
    const Eigen::MatrixXd table = read_table_csv(u0_rest);
    if (table.cols() != 1 || static_cast<std::size_t>(table.rows()) != grid.size()) {
      throw ModelError("u0 table does not match grid");
    }
    c.u0 = Field(grid, table.col(0));
  } else {
    throw ModelError("unknown u0 form '" + config.u0_form + "'");
  }

  validate(spec);
  return spec;
}

ProblemSpec make_problem(const std::string& preset, int dim, int cells_per_axis, double horizon, double mass) {
  ProblemConfig config;
  config.preset = preset;
  config.dim = dim;
  config.cells.assign(dim, cells_per_axis);
  config.horizon = horizon;
  config.mass = mass;
  return make_problem(config);
}

}  // namespace superdrift
