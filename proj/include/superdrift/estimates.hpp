#ifndef SUPERDRIFT_ESTIMATES_HPP
#define SUPERDRIFT_ESTIMATES_HPP

#include "superdrift/field_io.hpp"
#include "superdrift/rational.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace superdrift {

class RegimeError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

// ---------------------------------------------------------------------------
// Parabolic exponents. Templated so the identities can be checked exactly
// with Rational as well as in double precision.

template <typename Scalar>
Scalar q_star(int N, const Scalar& q) {
  const Scalar n2 = Scalar(N + 2);
  return n2 * q / (n2 - q);
}

template <typename Scalar>
Scalar q_star_star(int N, const Scalar& q) {
  const Scalar n2 = Scalar(N + 2);
  return n2 * q / (n2 - Scalar(2) * q);
}

template <typename Scalar>
Scalar gamma_exponent(int N, const Scalar& q) {
  const Scalar n = Scalar(N);
  return (q * n - Scalar(2) * n - Scalar(4) + Scalar(4) * q) / (Scalar(2) * (Scalar(N + 2) - Scalar(2) * q));
}

template <typename Scalar>
Scalar sigma_exponent(int N) {
  return Scalar(2 * (N + 2)) / Scalar(N);
}

/// Conjugate of sigma, 2(N+2)/(N+4).
template <typename Scalar>
Scalar sigma_prime(int N) {
  return Scalar(2 * (N + 2)) / Scalar(N + 4);
}

template <typename Scalar>
struct ExponentTable {
  int N = 3;
  Scalar q{1};
  Scalar r_inv{0};  ///< 1/r, 0 for r = infinity
  Scalar theta{0};
  Scalar mu{1};
  Scalar m{2};

  Scalar q_star{0};
  Scalar q_star_star{0};
  Scalar gamma{0};
  Scalar sigma{0};
  Scalar sigma_prime{0};
  std::optional<Scalar> q_conjugate;  ///< q/(q-1); absent for q = 1
  Scalar decay_exponent{0};           ///< (N/2)(1/mu - 1/m)

  /// (2 gamma + 2) - q** N/(N+2)
  Scalar gamma_identity_residual() const { return Scalar(2) * gamma + Scalar(2) - q_star_star * Scalar(N) / Scalar(N + 2); }

  /// q'(2 gamma + 1) - q**, when q > 1
  std::optional<Scalar> conjugate_identity_residual() const {
    if (!q_conjugate) return std::nullopt;
    return *q_conjugate * (Scalar(2) * gamma + Scalar(1)) - q_star_star;
  }
};

template <typename Scalar>
ExponentTable<Scalar> exponent_table(int N, const Scalar& q, const Scalar& r_inv = Scalar(0),
                                     const Scalar& theta = Scalar(0), const Scalar& mu = Scalar(1),
                                     const Scalar& m = Scalar(2)) {
  if (N < 1 || N > 3) throw std::invalid_argument("dimension must be 1, 2 or 3");
  if (q < Scalar(1)) throw std::invalid_argument("q must be at least 1");
  if (!(Scalar(2) * q < Scalar(N + 2))) throw std::invalid_argument("q must stay below (N+2)/2");
  if (r_inv < Scalar(0)) throw std::invalid_argument("1/r must be non-negative");
  if (theta < Scalar(0)) throw std::invalid_argument("theta must be non-negative");
  if (mu < Scalar(1) || m < mu) throw std::invalid_argument("need 1 <= mu <= m");
  ExponentTable<Scalar> t;
  t.N = N;
  t.q = q;
  t.r_inv = r_inv;
  t.theta = theta;
  t.mu = mu;
  t.m = m;
  t.q_star = q_star(N, q);
  t.q_star_star = q_star_star(N, q);
  t.gamma = gamma_exponent(N, q);
  t.sigma = sigma_exponent<Scalar>(N);
  t.sigma_prime = sigma_prime<Scalar>(N);
  if (q > Scalar(1)) t.q_conjugate = q / (q - Scalar(1));
  t.decay_exponent = Scalar(N) / Scalar(2) * (Scalar(1) / mu - Scalar(1) / m);
  return t;
}

// ---------------------------------------------------------------------------
// Regimes.

enum class Regime { GlobalSmallTheta, ParabolicSmallTheta, ParabolicLargeData, LocalLargeTheta, None };

std::string to_string(Regime regime);

struct RegimeCheck {
  Regime regime = Regime::None;
  std::string condition;
  double slack = 0.0;  ///< >= 0 (or > 0 for strict conditions) when the condition holds
  bool holds = false;
  std::string note;    ///< why the regime is inapplicable, when it is
};

struct RegimeReport {
  Regime regime = Regime::None;  ///< strongest regime that holds
  std::string binding_condition;
  double slack = 0.0;
  std::vector<Regime> satisfied;  ///< all regimes that hold, strongest first
  std::vector<RegimeCheck> checks;
};

template <typename Scalar>
RegimeReport classify_regime(int N, const Scalar& theta, const Scalar& r_inv, const Scalar& mu,
                             const std::optional<Scalar>& q = std::nullopt) {
  if (N < 1 || N > 3) throw std::invalid_argument("dimension must be 1, 2 or 3");
  if (theta < Scalar(0)) throw std::invalid_argument("theta must be non-negative");
  if (r_inv < Scalar(0)) throw std::invalid_argument("1/r must be non-negative");
  if (mu < Scalar(1)) throw std::invalid_argument("mu must be at least 1");
  const Scalar zero(0);
  const Scalar invN = Scalar(1) / Scalar(N);
  const Scalar invN2 = Scalar(1) / Scalar(N + 2);
  auto to_d = [](const Scalar& s) { return static_cast<double>(s); };

  std::vector<RegimeCheck> checks;
  {
    RegimeCheck c{Regime::GlobalSmallTheta, "1/r+theta<=1/N", to_d(invN - r_inv - theta), false, ""};
    if (!(theta > zero)) c.note = "needs theta > 0";
    else if (!(r_inv < invN)) c.note = "needs r > N";
    else c.holds = invN - r_inv - theta >= zero;
    checks.push_back(c);
  }
  {
    RegimeCheck c{Regime::ParabolicSmallTheta, "1/r+theta<=1/(N+2)", to_d(invN2 - r_inv - theta), false, ""};
    if (q && (*q < Scalar(1) || !(Scalar(2) * *q < Scalar(N + 2)))) c.note = "needs 1 <= q < (N+2)/2";
    else c.holds = invN2 - r_inv - theta >= zero;
    checks.push_back(c);
  }
  {
    RegimeCheck c{Regime::ParabolicLargeData, "1/r+theta/q**<=1/(N+2)", 0.0, false, ""};
    if (!q) {
      c.note = "needs q";
      c.slack = -std::numeric_limits<double>::infinity();
    } else if (*q < sigma_prime<Scalar>(N) || !(Scalar(2) * *q < Scalar(N + 2))) {
      c.note = "needs 2(N+2)/(N+4) <= q < (N+2)/2";
      c.slack = -std::numeric_limits<double>::infinity();
    } else {
      const Scalar s = invN2 - r_inv - theta / q_star_star(N, *q);
      c.slack = to_d(s);
      if (!(theta > zero)) c.note = "needs theta > 0";
      else if (!(r_inv < invN2)) c.note = "needs r > N+2";
      else c.holds = s >= zero;
    }
    checks.push_back(c);
  }
  {
    RegimeCheck c{Regime::LocalLargeTheta, "1/r+theta/mu<1/N", to_d(invN - r_inv - theta / mu), false, ""};
    if (!(theta > zero)) c.note = "needs theta > 0";
    else if (!(mu > Scalar(1))) c.note = "needs mu > 1";
    else if (!(r_inv < invN)) c.note = "needs r > N";
    else c.holds = invN - r_inv - theta / mu > zero;
    checks.push_back(c);
  }

  RegimeReport report;
  report.checks = checks;
  for (const auto& c : checks) {
    if (c.holds) report.satisfied.push_back(c.regime);
  }
  if (!report.satisfied.empty()) {
    const auto& best = *std::find_if(checks.begin(), checks.end(), [](const RegimeCheck& c) { return c.holds; });
    report.regime = best.regime;
    report.binding_condition = best.condition;
    report.slack = best.slack;
  } else {
    // Nearest miss among the conditions that could apply.
    const RegimeCheck* nearest = nullptr;
    for (const auto& c : checks) {
      if (!c.note.empty()) continue;
      if (!nearest || c.slack > nearest->slack) nearest = &c;
    }
    if (!nearest) nearest = &checks.front();
    report.binding_condition = nearest->condition;
    report.slack = nearest->slack;
  }
  return report;
}

// ---------------------------------------------------------------------------
// ODE comparison machinery.

/// (1/(aK))^{1/a} e^{Ct} / t^{1/a}: bound for any y with y' + K y^{1+a} <= C y.
double ode_bound(double a, double K, double C, double t);

/// y' = C y - K y^{1+a} + C_m y^{1+d}, y(0) = y0.
struct OdeParams {
  double K = 0.0;
  double C = 0.0;
  double a = 1.0;
  double d = 0.0;
  double C_m = 0.0;
  double y0 = 1.0;
};

struct OdeSolution {
  std::vector<double> t;
  std::vector<double> y;
  std::optional<double> blowup_time;   ///< hitting time of the blow-up threshold
  double blowup_bracket_lo = 0.0;      ///< set when the step size collapsed
  double blowup_bracket_hi = 0.0;
  long steps = 0;
};

struct OdeOptions {
  double tol = 1e-10;
  double blowup_threshold = 1e12;
  int samples = 200;        ///< log-spaced sample points in [t_first, t_end]
  double t_first = 1e-6;    ///< first positive sample, relative to t_end when below 1
};

/// Adaptive Dormand-Prince 5(4) integration sampled on a log-spaced grid.
OdeSolution ode_integrate(const OdeParams& params, double t_end, const OdeOptions& options = {});

/// Same, sampled at caller-supplied increasing times.
OdeSolution ode_integrate_at(const OdeParams& params, const std::vector<double>& times, const OdeOptions& options = {});

struct BlowupTime {
  double b = 0.0;
  double T_star = 0.0;
};

/// b = 2 theta / (mu (1 - N/r) - N theta) and T* = 1 / (b C_mu |u0|_mu^{b mu}),
/// the blow-up time of y' = C_mu y^{1+b} from y(0) = |u0|_mu^mu.
BlowupTime blowup_time(double mu, double r_inv, int N, double theta, double C_mu, double norm_u0);

// ---------------------------------------------------------------------------
// Slicing and smallness.

struct SlicingPlan {
  double h = 0.0;
  long slices = 1;
};

/// h = (4 A |E|^2 M0^{2 theta})^{-1/(2 theta)}, slices = ceil(T / h).
SlicingPlan slicing_plan(double theta, double norm_E, double M0, double A_const, double T);

struct Smallness {
  double lhs = 0.0;
  double threshold = 0.0;
  bool satisfied = false;
};

/// |E|^{1/theta} (|f| + |u0|) against theta / (C (theta+1))^{(theta+1)/theta}.
Smallness smallness_check(double theta, double norm_E, double norm_f, double norm_u0, double C = 1.0);

/// Superlevel estimate |E|^2/rho + |u0|_1 / rho^{1/(2 theta)} of the decay argument.
double drift_superlevel_bound(double norm_E_sq, double u0_l1, double theta, double rho);

// ---------------------------------------------------------------------------
// Decay fits.

struct FitWindow {
  double t_lo = 0.0;
  double t_hi = 0.0;
};

struct DecayFit {
  double slope = 0.0;
  double intercept = 0.0;
  double predicted = 0.0;
  double relative_deviation = 0.0;
  double r_squared = 0.0;
  std::size_t samples = 0;
  FitWindow window;
};

/// Least-squares slope of log y against log t over the window.
DecayFit fit_power_law(const std::vector<double>& t, const std::vector<double>& y, const FitWindow& window,
                       std::size_t min_samples = 10);

/// Fit of log |u|_m against log t with prediction -(N/2)(1/mu - 1/m).
DecayFit fit_decay_exponent(const NormSeries& norms, double m, const FitWindow& window, int N, double mu);

/// [5 dt, t_b] with t_b the first time the boundary-adjacent sup norm exceeds
/// `fraction` of the sup norm (final time if it never does).
FitWindow pre_boundary_window(const NormSeries& norms, double fraction = 0.01);

}  // namespace superdrift

#endif  // SUPERDRIFT_ESTIMATES_HPP
