#ifndef SUPERDRIFT_GRID_HPP
#define SUPERDRIFT_GRID_HPP

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace superdrift {

/// Uniform Cartesian box [0, L_0) x ... x [0, L_{N-1}) split into cells.
///
/// Cells are numbered lexicographically with axis 0 varying fastest, so the
/// linear index of (i0, i1, i2) is i0 + n0 * (i1 + n1 * i2).
class Grid {
public:
  static constexpr int kMaxDim = 3;
  using Point = Eigen::Vector3d;
  using Index = std::array<int, kMaxDim>;

  Grid() = default;

  Grid(int dim, const std::vector<double>& extents, const std::vector<int>& cells) {
    if (dim < 1 || dim > kMaxDim) {
      throw std::invalid_argument("grid dimension must be 1, 2 or 3");
    }
    if (extents.size() != static_cast<std::size_t>(dim) || cells.size() != static_cast<std::size_t>(dim)) {
      throw std::invalid_argument("grid extents/cells must have one entry per axis");
    }
    dim_ = dim;
    for (int a = 0; a < dim; ++a) {
      if (!(extents[a] > 0.0)) throw std::invalid_argument("grid extent must be positive");
      if (cells[a] < 2) throw std::invalid_argument("grid needs at least 2 cells per axis");
      extents_[a] = extents[a];
      cells_[a] = cells[a];
      spacing_[a] = extents[a] / cells[a];
    }
    stride_[0] = 1;
    for (int a = 1; a < kMaxDim; ++a) stride_[a] = stride_[a - 1] * cells_[a - 1];
    size_ = 1;
    cell_volume_ = 1.0;
    for (int a = 0; a < dim; ++a) {
      size_ *= static_cast<std::size_t>(cells_[a]);
      cell_volume_ *= spacing_[a];
    }
  }

  int dim() const { return dim_; }
  std::size_t size() const { return size_; }
  double extent(int axis) const { return extents_[axis]; }
  int cells(int axis) const { return cells_[axis]; }
  double spacing(int axis) const { return spacing_[axis]; }
  std::size_t stride(int axis) const { return stride_[axis]; }
  double cell_volume() const { return cell_volume_; }

  /// Area of a face normal to `axis` (1 in one dimension).
  double face_area(int axis) const { return cell_volume_ / spacing_[axis]; }

  double domain_volume() const {
    double v = 1.0;
    for (int a = 0; a < dim_; ++a) v *= extents_[a];
    return v;
  }

  double min_spacing() const {
    double h = spacing_[0];
    for (int a = 1; a < dim_; ++a) h = std::min(h, spacing_[a]);
    return h;
  }

  Index multi_index(std::size_t linear) const {
    Index idx{0, 0, 0};
    for (int a = 0; a < dim_; ++a) {
      idx[a] = static_cast<int>(linear % static_cast<std::size_t>(cells_[a]));
      linear /= static_cast<std::size_t>(cells_[a]);
    }
    return idx;
  }

  std::size_t linear_index(const Index& idx) const {
    std::size_t linear = 0;
    for (int a = dim_ - 1; a >= 0; --a) linear = linear * cells_[a] + idx[a];
    return linear;
  }

  Point cell_center(std::size_t linear) const {
    const Index idx = multi_index(linear);
    Point x = Point::Zero();
    for (int a = 0; a < dim_; ++a) x[a] = (idx[a] + 0.5) * spacing_[a];
    return x;
  }

  Point center() const {
    Point c = Point::Zero();
    for (int a = 0; a < dim_; ++a) c[a] = 0.5 * extents_[a];
    return c;
  }

  /// True when the cell touches the boundary of the box.
  bool is_boundary_cell(std::size_t linear) const {
    const Index idx = multi_index(linear);
    for (int a = 0; a < dim_; ++a) {
      if (idx[a] == 0 || idx[a] == cells_[a] - 1) return true;
    }
    return false;
  }

  friend bool operator==(const Grid& lhs, const Grid& rhs) {
    if (lhs.dim_ != rhs.dim_) return false;
    for (int a = 0; a < lhs.dim_ && a < kMaxDim; ++a) {
      if (lhs.cells_[a] != rhs.cells_[a] || lhs.extents_[a] != rhs.extents_[a]) return false;
    }
    return true;
  }
  friend bool operator!=(const Grid& lhs, const Grid& rhs) { return !(lhs == rhs); }

private:
  int dim_ = 0;
  std::array<double, kMaxDim> extents_{1.0, 1.0, 1.0};
  std::array<int, kMaxDim> cells_{1, 1, 1};
  std::array<double, kMaxDim> spacing_{1.0, 1.0, 1.0};
  std::array<std::size_t, kMaxDim> stride_{1, 1, 1};
  std::size_t size_ = 0;
  double cell_volume_ = 0.0;
};

inline Grid make_grid(int dim, const std::vector<double>& extents, const std::vector<int>& cells) {
  return Grid(dim, extents, cells);
}

}  // namespace superdrift

#endif  // SUPERDRIFT_GRID_HPP
