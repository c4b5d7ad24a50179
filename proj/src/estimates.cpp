#include "superdrift/estimates.hpp"

#include <cmath>

namespace superdrift {

std::string to_string(Regime regime) {
  switch (regime) {
    case Regime::GlobalSmallTheta:
      return "GlobalSmallTheta";
    case Regime::ParabolicSmallTheta:
      return "ParabolicSmallTheta";
    case Regime::ParabolicLargeData:
      return "ParabolicLargeData";
    case Regime::LocalLargeTheta:
      return "LocalLargeTheta";
    case Regime::None:
      return "None";
  }
  return "None";
}

double ode_bound(double a, double K, double C, double t) {
  if (!(a > 0.0) || !(K > 0.0)) throw std::invalid_argument("ode_bound needs a > 0 and K > 0");
  if (C < 0.0) throw std::invalid_argument("ode_bound needs C >= 0");
  if (!(t > 0.0)) throw std::invalid_argument("ode_bound needs t > 0");
  return std::pow(1.0 / (a * K), 1.0 / a) * std::exp(C * t) / std::pow(t, 1.0 / a);
}

BlowupTime blowup_time(double mu, double r_inv, int N, double theta, double C_mu, double norm_u0) {
  if (!(mu >= 1.0) || r_inv < 0.0 || N < 1 || !(theta > 0.0)) throw std::invalid_argument("bad blow-up time inputs");
  if (!(C_mu > 0.0) || !(norm_u0 > 0.0)) throw std::invalid_argument("blow-up time needs C_mu > 0 and |u0| > 0");
  const double denom = mu * (1.0 - N * r_inv) - N * theta;
  if (!(denom > 0.0)) throw RegimeError("blow-up time formula needs 1/r + theta/mu < 1/N");
  BlowupTime out;
  out.b = 2.0 * theta / denom;
  out.T_star = 1.0 / (out.b * C_mu * std::pow(norm_u0, out.b * mu));
  return out;
}

SlicingPlan slicing_plan(double theta, double norm_E, double M0, double A_const, double T) {
  if (!(theta > 0.0)) throw std::invalid_argument("slicing needs theta > 0");
  if (norm_E < 0.0 || !(M0 > 0.0) || !(A_const > 0.0) || !(T > 0.0)) {
    throw std::invalid_argument("slicing needs |E| >= 0 and positive M0, A and T");
  }
  SlicingPlan plan;
  if (norm_E == 0.0) {
    plan.h = std::numeric_limits<double>::infinity();
    return plan;
  }
  plan.h = std::pow(4.0 * A_const * norm_E * norm_E * std::pow(M0, 2.0 * theta), -1.0 / (2.0 * theta));
  plan.slices = plan.h >= T ? 1 : static_cast<long>(std::ceil(T / plan.h));
  return plan;
}

Smallness smallness_check(double theta, double norm_E, double norm_f, double norm_u0, double C) {
  if (!(theta > 0.0) || !(C > 0.0)) throw std::invalid_argument("smallness needs theta > 0 and C > 0");
  Smallness s;
  const double data = norm_f + norm_u0;
  s.lhs = data == 0.0 ? 0.0 : std::pow(norm_E, 1.0 / theta) * data;
  s.threshold = theta / std::pow(C * (theta + 1.0), (theta + 1.0) / theta);
  s.satisfied = s.lhs <= s.threshold;
  return s;
}

double drift_superlevel_bound(double norm_E_sq, double u0_l1, double theta, double rho) {
  if (!(rho > 0.0) || !(theta > 0.0)) throw std::invalid_argument("superlevel bound needs rho > 0 and theta > 0");
  return norm_E_sq / rho + u0_l1 / std::pow(rho, 1.0 / (2.0 * theta));
}

DecayFit fit_power_law(const std::vector<double>& t, const std::vector<double>& y, const FitWindow& window,
                       std::size_t min_samples) {
  if (t.size() != y.size()) throw std::invalid_argument("fit needs matching time and value columns");
  if (!(window.t_lo > 0.0) || !(window.t_hi > window.t_lo)) throw std::invalid_argument("fit window must be 0 < t_lo < t_hi");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < window.t_lo || t[i] > window.t_hi) continue;
    if (!(y[i] > 0.0)) throw std::invalid_argument("fit needs positive norms");
    lx.push_back(std::log(t[i]));
    ly.push_back(std::log(y[i]));
  }
  if (lx.size() < min_samples) throw std::invalid_argument("too few samples in the fit window");
  const double n = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  DecayFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy == 0.0 ? 1.0 : sxy * sxy / (sxx * syy);
  fit.samples = lx.size();
  fit.window = window;
  return fit;
}

DecayFit fit_decay_exponent(const NormSeries& norms, double m, const FitWindow& window, int N, double mu) {
  DecayFit fit = fit_power_law(norms.times(), norms.column(m), window);
  fit.predicted = -0.5 * N * (1.0 / mu - 1.0 / m);
  fit.relative_deviation = fit.predicted == 0.0 ? std::abs(fit.slope) : std::abs(fit.slope - fit.predicted) / std::abs(fit.predicted);
  return fit;
}

FitWindow pre_boundary_window(const NormSeries& norms, double fraction) {
  if (norms.records.size() < 2) throw std::invalid_argument("window needs at least two records");
  const double dt = norms.records[1].dt > 0.0 ? norms.records[1].dt : norms.records[1].t;
  FitWindow w;
  w.t_lo = 5.0 * dt;
  w.t_hi = norms.records.back().t;
  for (const auto& r : norms.records) {
    if (r.t > 0.0 && r.boundary_linf > fraction * r.Linf) {
      w.t_hi = r.t;
      break;
    }
  }
  return w;
}

}  // namespace superdrift
