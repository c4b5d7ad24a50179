#include "superdrift/estimates.hpp"

#include <array>
#include <cmath>

namespace superdrift {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200, e6 = 22.0 / 525,
                 e7 = -1.0 / 40;

struct Rhs {
  OdeParams p;
  double operator()(double y) const {
    const double ay = std::abs(y);
    double v = p.C * y;
    if (p.K != 0.0) v -= p.K * std::copysign(std::pow(ay, 1.0 + p.a), y);
    if (p.C_m != 0.0) v += p.C_m * std::copysign(std::pow(ay, 1.0 + p.d), y);
    return v;
  }
};

struct Trial {
  double y = 0.0;
  double err = 0.0;
};

// One DP step of size h from y; autonomous right-hand side.
Trial dp_step(const Rhs& f, double y, double h) {
  const double k1 = f(y);
  const double k2 = f(y + h * a21 * k1);
  const double k3 = f(y + h * (a31 * k1 + a32 * k2));
  const double k4 = f(y + h * (a41 * k1 + a42 * k2 + a43 * k3));
  const double k5 = f(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
  const double k6 = f(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
  Trial out;
  out.y = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
  const double k7 = f(out.y);
  out.err = std::abs(h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7));
  return out;
}

}  // namespace

OdeSolution ode_integrate_at(const OdeParams& params, const std::vector<double>& times, const OdeOptions& options) {
  if (!(params.y0 > 0.0)) throw std::invalid_argument("ode_integrate needs y0 > 0");
  if (!(options.tol > 0.0)) throw std::invalid_argument("ode tolerance must be positive");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < 0.0 || (i > 0 && !(times[i] > times[i - 1]))) {
      throw std::invalid_argument("sample times must be non-negative and increasing");
    }
  }
  const Rhs f{params};
  OdeSolution sol;
  double t = 0.0;
  double y = params.y0;
  const double slope0 = std::abs(f(y));
  double h = slope0 > 0.0 ? 0.01 * std::max(std::abs(y), 1e-300) / slope0 : 0.01;
  if (!times.empty()) h = std::min(h, std::max(times.back(), 1e-12) * 0.01);

  auto tolerance = [&](double y_now, double y_next) {
    return options.tol * (1.0 + std::max(std::abs(y_now), std::abs(y_next)));
  };

  for (const double target : times) {
    while (t < target) {
      double step = std::min(h, target - t);
      const Trial trial = dp_step(f, y, step);
      const double tol = tolerance(y, trial.y);
      if (!std::isfinite(trial.y) || trial.err > tol) {
        const double factor = std::isfinite(trial.err) && trial.err > 0.0 ? 0.9 * std::pow(tol / trial.err, 0.2) : 0.1;
        h = step * std::clamp(factor, 0.1, 0.9);
        if (h < 1e-15 * std::max(t, 1e-300) || h < 1e-300) {
          sol.blowup_bracket_lo = t;
          sol.blowup_bracket_hi = t + step;
          sol.blowup_time = t;
          return sol;
        }
        continue;
      }
      if (std::abs(trial.y) > options.blowup_threshold) {
        // Bisect the step length for the threshold crossing.
        double lo = 0.0, hi = step;
        for (int it = 0; it < 200 && hi - lo > 1e-15 * (t + hi); ++it) {
          const double mid = 0.5 * (lo + hi);
          const Trial probe = dp_step(f, y, mid);
          if (std::isfinite(probe.y) && std::abs(probe.y) <= options.blowup_threshold) {
            lo = mid;
          } else {
            hi = mid;
          }
        }
        sol.blowup_bracket_lo = t + lo;
        sol.blowup_bracket_hi = t + hi;
        sol.blowup_time = t + 0.5 * (lo + hi);
        return sol;
      }
      t = (step == target - t) ? target : t + step;
      y = trial.y;
      ++sol.steps;
      const double factor = trial.err > 0.0 ? 0.9 * std::pow(tol / trial.err, 0.2) : 5.0;
      h = step * std::clamp(factor, 0.2, 5.0);
    }
    sol.t.push_back(target);
    sol.y.push_back(y);
  }
  return sol;
}

OdeSolution ode_integrate(const OdeParams& params, double t_end, const OdeOptions& options) {
  if (!(t_end > 0.0)) throw std::invalid_argument("ode_integrate needs t_end > 0");
  if (options.samples < 2) throw std::invalid_argument("need at least two samples");
  const double first = std::min(options.t_first, 0.5) * (t_end < 1.0 ? t_end : 1.0);
  std::vector<double> times{0.0};
  const double l0 = std::log(first), l1 = std::log(t_end);
  for (int i = 0; i < options.samples; ++i) {
    const double s = static_cast<double>(i) / (options.samples - 1);
    times.push_back(i + 1 == options.samples ? t_end : std::exp(l0 + s * (l1 - l0)));
  }
  return ode_integrate_at(params, times, options);
}

}  // namespace superdrift
