#ifndef SUPERDRIFT_FIELD_HPP
#define SUPERDRIFT_FIELD_HPP

#include "superdrift/grid.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace superdrift {

/// Cell-averaged scalar field on a Grid.
///
/// A field may carry a "blown-up" flag, set by the solver when the sup norm
/// exceeds its cap. Integral norms refuse flagged fields instead of
/// producing Inf.
template <typename Scalar>
class BasicField {
public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  BasicField() = default;

  explicit BasicField(Grid grid) : grid_(std::move(grid)), values_(Vector::Zero(grid_.size())) {}

  BasicField(Grid grid, Vector values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (static_cast<std::size_t>(values_.size()) != grid_.size()) {
      throw std::invalid_argument("field value count does not match grid cell count");
    }
  }

  template <typename Fn>
  static BasicField from_function(const Grid& grid, Fn&& fn) {
    Vector v(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) v[static_cast<Eigen::Index>(i)] = fn(grid.cell_center(i));
    return BasicField(grid, std::move(v));
  }

  const Grid& grid() const { return grid_; }
  const Vector& values() const { return values_; }
  Vector& values() { return values_; }
  std::size_t size() const { return static_cast<std::size_t>(values_.size()); }

  Scalar operator[](std::size_t i) const { return values_[static_cast<Eigen::Index>(i)]; }
  Scalar& operator[](std::size_t i) { return values_[static_cast<Eigen::Index>(i)]; }

  bool blown_up() const { return blown_up_; }
  void mark_blown_up() { blown_up_ = true; }

  bool all_finite() const { return values_.allFinite(); }

private:
  Grid grid_;
  Vector values_;
  bool blown_up_ = false;
};

using Field = BasicField<double>;

namespace detail {

template <typename Scalar>
void require_usable(const BasicField<Scalar>& field) {
  if (field.blown_up()) throw std::domain_error("norm requested on a blown-up field");
}

template <typename Scalar>
Scalar abs_pow(Scalar value, double m) {
  using std::abs;
  using std::pow;
  const Scalar a = abs(value);
  if (a == Scalar(0)) return Scalar(0);
  if (m == 1.0) return a;
  if (m == 2.0) return a * a;
  return pow(a, m);
}

}  // namespace detail

/// Sum over cells of |u_i|^m times the cell volume. Works on any Eigen
/// vector expression.
template <typename Derived>
typename Derived::Scalar integrate_power(const Eigen::MatrixBase<Derived>& values, double cell_volume, double m) {
  using Scalar = typename Derived::Scalar;
  if (!(m >= 1.0)) throw std::invalid_argument("integrate_power needs m >= 1");
  Scalar sum(0);
  for (Eigen::Index i = 0; i < values.size(); ++i) sum += detail::abs_pow<Scalar>(values[i], m);
  return sum * Scalar(cell_volume);
}

template <typename Scalar>
Scalar integrate_power(const BasicField<Scalar>& field, double m) {
  detail::require_usable(field);
  return integrate_power(field.values(), field.grid().cell_volume(), m);
}

template <typename Scalar>
Scalar lp_norm(const BasicField<Scalar>& field, double m) {
  using std::pow;
  const Scalar integral = integrate_power(field, m);
  return m == 1.0 ? integral : pow(integral, 1.0 / m);
}

template <typename Scalar>
Scalar linf_norm(const BasicField<Scalar>& field) {
  detail::require_usable(field);
  if (field.size() == 0) return Scalar(0);
  return field.values().cwiseAbs().maxCoeff();
}

/// Signed integral of the cell values.
template <typename Scalar>
Scalar integral(const BasicField<Scalar>& field) {
  detail::require_usable(field);
  return field.values().sum() * Scalar(field.grid().cell_volume());
}

/// (T_k(s), G_k(s)) with T_k(s) = max(-k, min(s, k)) and G_k = s - T_k.
template <typename Scalar>
std::pair<Scalar, Scalar> truncation_pair(Scalar s, Scalar k) {
  if (!(k > Scalar(0))) throw std::invalid_argument("truncation level must be positive");
  const Scalar t = std::max(-k, std::min(s, k));
  return {t, s - t};
}

template <typename Scalar>
BasicField<Scalar> truncate(const BasicField<Scalar>& field, Scalar k) {
  if (!(k > Scalar(0))) throw std::invalid_argument("truncation level must be positive");
  BasicField<Scalar> out(field.grid(), field.values().cwiseMax(-k).cwiseMin(k));
  return out;
}

template <typename Scalar>
BasicField<Scalar> excess(const BasicField<Scalar>& field, Scalar k) {
  BasicField<Scalar> t = truncate(field, k);
  return BasicField<Scalar>(field.grid(), field.values() - t.values());
}

/// Measure of {|u| > k} in the box.
template <typename Scalar>
double superlevel_measure(const BasicField<Scalar>& field, double k) {
  if (!(k > 0.0)) throw std::invalid_argument("superlevel threshold must be positive");
  detail::require_usable(field);
  using std::abs;
  std::size_t count = 0;
  for (std::size_t i = 0; i < field.size(); ++i) {
    if (abs(field[i]) > Scalar(k)) ++count;
  }
  return static_cast<double>(count) * field.grid().cell_volume();
}

/// Time-indexed snapshots on a shared grid, t_0 = 0.
///
/// Snapshot j > 0 stands for the solution on (t_{j-1}, t_j]; snapshot 0 has
/// zero time weight. This matches the backward-Euler stepping of the solver.
template <typename Scalar>
class BasicSeries {
public:
  using FieldType = BasicField<Scalar>;

  BasicSeries() = default;

  void push_back(double t, FieldType snapshot) {
    if (times_.empty()) {
      if (t != 0.0) throw std::invalid_argument("series must start at t = 0");
    } else {
      if (!(t > times_.back())) throw std::invalid_argument("series times must be strictly increasing");
      if (snapshot.grid() != snapshots_.front().grid()) {
        throw std::invalid_argument("all snapshots of a series must share one grid");
      }
    }
    times_.push_back(t);
    snapshots_.push_back(std::move(snapshot));
  }

  std::size_t size() const { return times_.size(); }
  bool empty() const { return times_.empty(); }
  const std::vector<double>& times() const { return times_; }
  const std::vector<FieldType>& snapshots() const { return snapshots_; }
  const FieldType& operator[](std::size_t j) const { return snapshots_[j]; }
  const FieldType& back() const { return snapshots_.back(); }
  const Grid& grid() const { return snapshots_.front().grid(); }
  double final_time() const { return times_.empty() ? 0.0 : times_.back(); }

  /// Time weight of snapshot j (0 for the initial snapshot).
  double weight(std::size_t j) const { return j == 0 ? 0.0 : times_[j] - times_[j - 1]; }

private:
  std::vector<double> times_;
  std::vector<FieldType> snapshots_;
};

using SpaceTimeSeries = BasicSeries<double>;

/// Space-time measure of {|u| > k}, cell volume times time weight.
template <typename Scalar>
double superlevel_measure(const BasicSeries<Scalar>& series, double k) {
  double total = 0.0;
  for (std::size_t j = 1; j < series.size(); ++j) total += series.weight(j) * superlevel_measure(series[j], k);
  return total;
}

template <typename Scalar>
Scalar spacetime_integrate_power(const BasicSeries<Scalar>& series, double m) {
  Scalar total(0);
  for (std::size_t j = 1; j < series.size(); ++j) total += Scalar(series.weight(j)) * integrate_power(series[j], m);
  return total;
}

template <typename Scalar>
Scalar spacetime_lp_norm(const BasicSeries<Scalar>& series, double p) {
  using std::pow;
  return pow(spacetime_integrate_power(series, p), 1.0 / p);
}

namespace detail {

// sup_k k^p lambda(k) for a piecewise-constant function given as
// (|value|, measure) atoms. The sup is approached as k tends to a level from
// below, where lambda equals the measure of {|f| >= level}.
inline double marcinkiewicz_from_atoms(std::vector<std::pair<double, double>> atoms, double p) {
  if (!(p > 1.0)) throw std::invalid_argument("Marcinkiewicz exponent must exceed 1");
  std::sort(atoms.begin(), atoms.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  double best = 0.0;
  double measure_above = 0.0;
  std::size_t i = 0;
  while (i < atoms.size()) {
    const double level = atoms[i].first;
    while (i < atoms.size() && atoms[i].first == level) measure_above += atoms[i++].second;
    if (level > 0.0) best = std::max(best, std::pow(level, p) * measure_above);
  }
  return std::pow(best, 1.0 / p);
}

}  // namespace detail

/// Weak-L^p norm (sup_k k^p lambda(k))^{1/p}, evaluated exactly over the
/// distinct levels of the space-time series.
template <typename Scalar>
double marcinkiewicz_norm(const BasicSeries<Scalar>& series, double p) {
  std::vector<std::pair<double, double>> atoms;
  for (std::size_t j = 1; j < series.size(); ++j) {
    const auto& snap = series[j];
    detail::require_usable(snap);
    const double w = series.weight(j) * snap.grid().cell_volume();
    for (std::size_t i = 0; i < snap.size(); ++i) atoms.emplace_back(std::abs(static_cast<double>(snap[i])), w);
  }
  return detail::marcinkiewicz_from_atoms(std::move(atoms), p);
}

template <typename Scalar>
double marcinkiewicz_norm(const BasicField<Scalar>& field, double p) {
  detail::require_usable(field);
  std::vector<std::pair<double, double>> atoms;
  atoms.reserve(field.size());
  for (std::size_t i = 0; i < field.size(); ++i) {
    atoms.emplace_back(std::abs(static_cast<double>(field[i])), field.grid().cell_volume());
  }
  return detail::marcinkiewicz_from_atoms(std::move(atoms), p);
}

}  // namespace superdrift

#endif  // SUPERDRIFT_FIELD_HPP
