#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace levyhomog {

/// A point on the unit torus, padded to two coordinates (second unused in 1d).
using Point = std::array<double, 2>;

/// Uniform periodic grid on [0,1)^dim with n points per axis, h = 1/n.
struct TorusGrid {
  int dim = 1;
  int n = 8;

  TorusGrid() = default;
  TorusGrid(int dim_, int n_);

  double h() const { return 1.0 / static_cast<double>(n); }
  std::size_t size() const;

  int wrap(int i) const {
    i %= n;
    return i < 0 ? i + n : i;
  }
  std::size_t index(int i0, int i1 = 0) const {
    return dim == 1 ? static_cast<std::size_t>(wrap(i0))
                    : static_cast<std::size_t>(wrap(i0)) * n + wrap(i1);
  }
  Point point(std::size_t flat) const;
  Point point(int i0, int i1) const { return point(index(i0, i1)); }

  bool operator==(const TorusGrid& o) const { return dim == o.dim && n == o.n; }
};

/// Immutable sampled function on a TorusGrid. Evaluation between nodes is
/// periodic multilinear interpolation.
class GridFunction {
 public:
  GridFunction() = default;
  GridFunction(TorusGrid grid, double fill = 0.0);
  GridFunction(TorusGrid grid, std::vector<double> values);

  const TorusGrid& grid() const { return grid_; }
  const std::vector<double>& values() const { return v_; }
  std::size_t size() const { return v_.size(); }

  double operator[](std::size_t i) const { return v_[i]; }
  double at(int i0, int i1 = 0) const { return v_[grid_.index(i0, i1)]; }

  /// Periodic multilinear interpolation; exact at nodes.
  double sample_at(const Point& p) const;

  double max_abs() const;
  double mean() const;

  GridFunction with_values(std::vector<double> values) const {
    return GridFunction(grid_, std::move(values));
  }

  /// True when every stored value is finite.
  bool all_finite() const;

 private:
  TorusGrid grid_;
  std::vector<double> v_;
};

/// Per-node vectors on a TorusGrid (gradients, drift tables).
struct VectorField {
  TorusGrid grid;
  std::array<std::vector<double>, 2> comp;  // comp[axis][node]

  VectorField() = default;
  explicit VectorField(TorusGrid g);
  double component(int axis, std::size_t node) const { return comp[axis][node]; }
};

/// One-sided difference per axis chosen against the drift sign; centered where
/// the drift component is exactly zero.
VectorField upwind_gradient(const GridFunction& gf, const VectorField& drift);

VectorField centered_gradient(const GridFunction& gf);

/// Max over nearest-neighbor pairs (periodic) of |difference| / h.
double lipschitz_seminorm(const GridFunction& gf);

double sup_norm_diff(const GridFunction& f, const GridFunction& g,
                     const std::vector<Point>& sample_points);

/// CSV with header `index_0[,index_1],value`, row-major.
void write_csv(const GridFunction& gf, const std::string& path);
GridFunction read_csv(int dim, const std::string& path);

}  // namespace levyhomog
