#ifndef SUPERDRIFT_WEAK_RESIDUAL_HPP
#define SUPERDRIFT_WEAK_RESIDUAL_HPP

#include "superdrift/fv_solver.hpp"

#include <functional>

namespace superdrift {

/// Closed-form space-time test function with its time derivative.
struct TestFunction {
  std::function<double(double, const Grid::Point&)> phi;
  std::function<double(double, const Grid::Point&)> dphi_dt;

  bool is_zero() const { return !phi; }
};

/// cos(omega t) times a product of C-infinity bumps exp(-1 / (1 - r^2)) of
/// the given radius around `center`.
TestFunction bump_test_function(int dim, const Grid::Point& center, double radius, double omega = 0.0);

/// |LHS - RHS| of the discrete weak formulation between snapshots j1 < j2,
/// using the scheme's own diffusion matrix, upwind drift at the previous
/// level and source at the new level. The series must hold every step.
double weak_residual(const SpaceTimeSeries& series, const ProblemSpec& problem, const TestFunction& testfn,
                     std::size_t j1, std::size_t j2);

/// Same, over a solver trajectory (rejects strided snapshots).
double weak_residual(const Trajectory& trajectory, const ProblemSpec& problem, const TestFunction& testfn,
                     std::size_t j1, std::size_t j2);

}  // namespace superdrift

#endif  // SUPERDRIFT_WEAK_RESIDUAL_HPP
