#include "levyhomog/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "levyhomog/errors.hpp"

namespace levyhomog {

TorusGrid::TorusGrid(int dim_, int n_) : dim(dim_), n(n_) {
  if (dim != 1 && dim != 2) throw ValidationError("TorusGrid: dim must be 1 or 2");
  if (n < 8) throw ValidationError("TorusGrid: n must be at least 8");
}

std::size_t TorusGrid::size() const {
  return dim == 1 ? static_cast<std::size_t>(n)
                  : static_cast<std::size_t>(n) * n;
}

Point TorusGrid::point(std::size_t flat) const {
  const double hh = h();
  if (dim == 1) return {static_cast<double>(flat) * hh, 0.0};
  return {static_cast<double>(flat / n) * hh, static_cast<double>(flat % n) * hh};
}

GridFunction::GridFunction(TorusGrid grid, double fill)
    : grid_(grid), v_(grid.size(), fill) {}

GridFunction::GridFunction(TorusGrid grid, std::vector<double> values)
    : grid_(grid), v_(std::move(values)) {
  if (v_.size() != grid_.size())
    throw ValidationError("GridFunction: value count does not match grid");
}

static inline double wrap_unit(double x) {
  double y = x - std::floor(x);
  if (y >= 1.0) y = 0.0;  // guard against floor rounding at the seam
  return y;
}

double GridFunction::sample_at(const Point& p) const {
  const int n = grid_.n;
  const double t0 = wrap_unit(p[0]) * n;
  int i0 = static_cast<int>(t0);
  if (i0 >= n) i0 = n - 1;
  const double f0 = t0 - i0;
  if (grid_.dim == 1) {
    const double a = v_[grid_.index(i0)];
    const double b = v_[grid_.index(i0 + 1)];
    return a + f0 * (b - a);
  }
  const double t1 = wrap_unit(p[1]) * n;
  int i1 = static_cast<int>(t1);
  if (i1 >= n) i1 = n - 1;
  const double f1 = t1 - i1;
  const double v00 = v_[grid_.index(i0, i1)];
  const double v01 = v_[grid_.index(i0, i1 + 1)];
  const double v10 = v_[grid_.index(i0 + 1, i1)];
  const double v11 = v_[grid_.index(i0 + 1, i1 + 1)];
  const double a = v00 + f1 * (v01 - v00);
  const double b = v10 + f1 * (v11 - v10);
  return a + f0 * (b - a);
}

double GridFunction::max_abs() const {
  double m = 0.0;
  for (double x : v_) m = std::max(m, std::abs(x));
  return m;
}

double GridFunction::mean() const {
  double s = 0.0;
  for (double x : v_) s += x;
  return s / static_cast<double>(v_.size());
}

bool GridFunction::all_finite() const {
  return std::all_of(v_.begin(), v_.end(),
                     [](double x) { return std::isfinite(x); });
}

VectorField::VectorField(TorusGrid g) : grid(g) {
  for (int a = 0; a < g.dim; ++a) comp[a].assign(g.size(), 0.0);
}

VectorField upwind_gradient(const GridFunction& gf, const VectorField& drift) {
  if (!(gf.grid() == drift.grid))
    throw ValidationError("upwind_gradient: grid mismatch");
  const TorusGrid& g = gf.grid();
  const double h = g.h();
  VectorField out(g);
  const int n = g.n;
  const int n1 = g.dim == 2 ? n : 1;
  for (int i0 = 0; i0 < n; ++i0) {
    for (int i1 = 0; i1 < n1; ++i1) {
      const std::size_t id = g.index(i0, i1);
      for (int ax = 0; ax < g.dim; ++ax) {
        const int d0 = ax == 0 ? 1 : 0;
        const int d1 = ax == 1 ? 1 : 0;
        const double up = gf.at(i0 + d0, i1 + d1);
        const double dn = gf.at(i0 - d0, i1 - d1);
        const double w = drift.comp[ax][id];
        double grad;
        if (w > 0.0)
          grad = (gf[id] - dn) / h;  // backward, against positive drift
        else if (w < 0.0)
          grad = (up - gf[id]) / h;
        else
          grad = (up - dn) / (2.0 * h);
        out.comp[ax][id] = grad;
      }
    }
  }
  return out;
}

VectorField centered_gradient(const GridFunction& gf) {
  VectorField zero(gf.grid());
  return upwind_gradient(gf, zero);
}

double lipschitz_seminorm(const GridFunction& gf) {
  const TorusGrid& g = gf.grid();
  const double inv_h = static_cast<double>(g.n);
  double m = 0.0;
  const int n = g.n;
  const int n1 = g.dim == 2 ? n : 1;
  for (int i0 = 0; i0 < n; ++i0)
    for (int i1 = 0; i1 < n1; ++i1) {
      const double v = gf.at(i0, i1);
      m = std::max(m, std::abs(gf.at(i0 + 1, i1) - v));
      if (g.dim == 2) m = std::max(m, std::abs(gf.at(i0, i1 + 1) - v));
    }
  return m * inv_h;
}

double sup_norm_diff(const GridFunction& f, const GridFunction& g,
                     const std::vector<Point>& sample_points) {
  if (sample_points.empty())
    throw ValidationError("sup_norm_diff: empty sample list");
  double m = 0.0;
  for (const Point& p : sample_points)
    m = std::max(m, std::abs(f.sample_at(p) - g.sample_at(p)));
  return m;
}

void write_csv(const GridFunction& gf, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("write_csv: cannot open " + path);
  const TorusGrid& g = gf.grid();
  char buf[64];
  if (g.dim == 1) {
    out << "index_0,value\n";
    for (int i = 0; i < g.n; ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", gf.at(i));
      out << i << ',' << buf << '\n';
    }
  } else {
    out << "index_0,index_1,value\n";
    for (int i0 = 0; i0 < g.n; ++i0)
      for (int i1 = 0; i1 < g.n; ++i1) {
        std::snprintf(buf, sizeof(buf), "%.17g", gf.at(i0, i1));
        out << i0 << ',' << i1 << ',' << buf << '\n';
      }
  }
}

GridFunction read_csv(int dim, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("read_csv: cannot open " + path);
  std::string line;
  std::getline(in, line);  // header
  std::vector<double> vals;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto pos = line.rfind(',');
    if (pos == std::string::npos) throw ValidationError("read_csv: bad row");
    vals.push_back(std::stod(line.substr(pos + 1)));
  }
  const std::size_t count = vals.size();
  int n = dim == 1 ? static_cast<int>(count)
                   : static_cast<int>(std::llround(std::sqrt(double(count))));
  TorusGrid g(dim, n);
  if (g.size() != count) throw ValidationError("read_csv: row count mismatch");
  return GridFunction(g, std::move(vals));
}

}  // namespace levyhomog
