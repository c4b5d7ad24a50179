#ifndef SUPERDRIFT_COMPARISON_HPP
#define SUPERDRIFT_COMPARISON_HPP

#include "superdrift/fv_solver.hpp"

#include <string>
#include <vector>

namespace superdrift {

/// Two runs advanced on one shared step sequence.
struct PairedRun {
  Trajectory v;
  Trajectory w;
};

/// Runs both problems in lockstep with dt = min of the two CFL steps.
/// Problems must share grid, M, E, nonlinearity and horizon. Every step is
/// stored regardless of the snapshot stride.
PairedRun paired_run(const ProblemSpec& problem_v, const ProblemSpec& problem_w, const SolverConfig& config);

struct PairedRunReport {
  std::vector<double> t;
  std::vector<double> lhs;  ///< integral of (v - w)_+
  std::vector<double> rhs;  ///< accumulated source term plus initial excess
  std::vector<double> gap;  ///< lhs - rhs
  double max_gap = 0.0;
  double tolerance = 0.0;   ///< 1e-8 (|v0|_1 + |w0|_1) plus accumulated linear-solve budget
  bool contraction_ok = true;
  bool order_applicable = false;  ///< v0 >= w0 and f >= g
  bool ordered_ok = true;
  double min_order_gap = 0.0;     ///< min over cells and times of v - w
};

PairedRunReport contraction_gap(const PairedRun& runs, const ProblemSpec& problem_v, const ProblemSpec& problem_w,
                                double lin_tol = 1e-12);

/// `t,lhs,rhs,gap` rows.
std::string gap_to_csv(const PairedRunReport& report);

}  // namespace superdrift

#endif  // SUPERDRIFT_COMPARISON_HPP
