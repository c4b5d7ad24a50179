#include "superdrift/weak_residual.hpp"

#include <cmath>

namespace superdrift {

namespace {

double bump(double r) { return std::abs(r) < 1.0 ? std::exp(-1.0 / (1.0 - r * r)) : 0.0; }

Eigen::VectorXd sample(const std::function<double(double, const Grid::Point&)>& fn, const Grid& grid, double t) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t i = 0; i < grid.size(); ++i) out[static_cast<Eigen::Index>(i)] = fn(t, grid.cell_center(i));
  return out;
}

void require_interior_support(const Eigen::VectorXd& phi, const Grid& grid) {
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid.is_boundary_cell(i) && phi[static_cast<Eigen::Index>(i)] != 0.0) {
      throw std::invalid_argument("test function support touches the boundary");
    }
  }
}

}  // namespace

TestFunction bump_test_function(int dim, const Grid::Point& center, double radius, double omega) {
  if (!(radius > 0.0)) throw std::invalid_argument("bump radius must be positive");
  if (dim < 1 || dim > Grid::kMaxDim) throw std::invalid_argument("bump dimension must be 1, 2 or 3");
  auto spatial = [center, radius, dim](const Grid::Point& x) {
    double v = 1.0;
    for (int a = 0; a < dim; ++a) v *= bump((x[a] - center[a]) / radius);
    return v;
  };
  TestFunction tf;
  tf.phi = [spatial, omega](double t, const Grid::Point& x) { return std::cos(omega * t) * spatial(x); };
  tf.dphi_dt = [spatial, omega](double t, const Grid::Point& x) { return -omega * std::sin(omega * t) * spatial(x); };
  return tf;
}

double weak_residual(const SpaceTimeSeries& series, const ProblemSpec& problem, const TestFunction& testfn,
                     std::size_t j1, std::size_t j2) {
  if (testfn.is_zero()) return 0.0;
  if (!(j1 < j2) || j2 >= series.size()) throw std::invalid_argument("weak residual needs snapshot indices j1 < j2");
  const Grid& grid = problem.grid;
  if (series.grid() != grid) throw std::invalid_argument("series and problem grids differ");
  const double vol = grid.cell_volume();
  const auto& times = series.times();
  const DiffusionOperator op = assemble_diffusion(grid, problem.coefficients.M);
  const auto& nl = problem.nonlinearity;
  const bool has_drift = !problem.coefficients.E.is_zero();

  auto source = [&](double t) {
    Eigen::VectorXd f = problem.coefficients.f.sample(grid, t);
    if (nl.reg_n) f = f.cwiseMax(-*nl.reg_n).cwiseMin(*nl.reg_n);
    return f;
  };

  const Eigen::VectorXd phi1 = sample(testfn.phi, grid, times[j1]);
  const Eigen::VectorXd phi2 = sample(testfn.phi, grid, times[j2]);
  require_interior_support(phi1, grid);
  require_interior_support(phi2, grid);

  double lhs = vol * (series[j2].values().dot(phi2) - series[j1].values().dot(phi1));
  double rhs = 0.0;
  for (std::size_t k = j1; k < j2; ++k) {
    const double dt = times[k + 1] - times[k];
    const double tm = 0.5 * (times[k] + times[k + 1]);
    const Eigen::VectorXd phi_mid = sample(testfn.phi, grid, tm);
    require_interior_support(phi_mid, grid);
    const Eigen::VectorXd dphi = sample(testfn.dphi_dt, grid, tm);
    const Eigen::VectorXd& next = series[k + 1].values();

    lhs -= dt * vol * next.dot(dphi);
    lhs += dt * (op.A * next).dot(phi_mid);
    if (has_drift) {
      const Eigen::MatrixXd E = problem.coefficients.E.sample(grid, times[k]);
      lhs += dt * vol * drift_divergence(grid, E, series[k], nl).values().dot(phi_mid);
    }
    rhs += dt * vol * source(times[k + 1]).dot(phi_mid);
  }
  return std::abs(lhs - rhs);
}

double weak_residual(const Trajectory& trajectory, const ProblemSpec& problem, const TestFunction& testfn,
                     std::size_t j1, std::size_t j2) {
  if (trajectory.series.size() != trajectory.steps.size() + 1) {
    throw std::invalid_argument("weak residual needs a trajectory with every step stored");
  }
  return weak_residual(trajectory.series, problem, testfn, j1, j2);
}

}  // namespace superdrift
