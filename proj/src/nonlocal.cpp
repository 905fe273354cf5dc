#include "levyhomog/nonlocal.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <sstream>

#include "levyhomog/errors.hpp"
#include "levyhomog/fft.hpp"

namespace levyhomog {

static double second_difference(const GridFunction& f, const Point& x, int axis,
                                double h) {
  Point xp = x, xm = x;
  xp[axis] += h;
  xm[axis] -= h;
  return (f.sample_at(xp) - 2.0 * f.sample_at(x) + f.sample_at(xm)) / (h * h);
}

static double cross_difference(const GridFunction& f, const Point& x, double h) {
  const Point pp{x[0] + h, x[1] + h}, pm{x[0] + h, x[1] - h};
  const Point mp{x[0] - h, x[1] + h}, mm{x[0] - h, x[1] - h};
  return (f.sample_at(pp) - f.sample_at(pm) - f.sample_at(mp) +
          f.sample_at(mm)) /
         (4.0 * h * h);
}

double apply_levy(const Stencil& st, const GridFunction& f, const Point& x,
                  const Point& grad, double fmean) {
  const double h = st.h;
  const double fx = f.sample_at(x);
  double val = 0.0;
  // singular cell: second moments times centered second differences
  val += 0.5 * st.m2sing[0] * second_difference(f, x, 0, h);
  if (st.dim == 2) {
    val += 0.5 * st.m2sing[1] * second_difference(f, x, 1, h);
    val += st.m2sing[2] * cross_difference(f, x, h);
  }
  // sampling cells with the compensator subtracted on B
  for (const StencilNode& nd : st.nodes) {
    Point y{x[0] + nd.z0, x[1] + nd.z1};
    double term = f.sample_at(y) - fx;
    if (nd.in_ball) term -= grad[0] * nd.z0 + (st.dim == 2 ? grad[1] * nd.z1 : 0.0);
    val += nd.w * term;
  }
  // tail: periodic data averages out beyond R_max
  val += (fmean - fx) * st.tail_mass;
  if (!std::isfinite(val)) {
    std::ostringstream diag;
    diag << "cells=" << st.nodes.size() << " total_mass=" << st.total_mass
         << " tail_mass=" << st.tail_mass << " rho_sing=" << st.rho_sing;
    throw QuadratureError("apply_levy: non-finite value", diag.str());
  }
  return val;
}

double apply_levy(const LevyKernel& k, int a, const Point& xi,
                  const GridFunction& f, const Point& x, const Point& grad,
                  const StencilOptions& opt) {
  const Stencil st = build_stencil(k, a, xi, f.grid(), opt);
  return apply_levy(st, f, x, grad, f.mean());
}

double apply_compiled(const CompiledStencil& cs, const TorusGrid& g,
                      const std::vector<double>& v, int i0, int i1,
                      const Point& grad, double fmean) {
  const double h = g.h();
  const int n = g.n;
  double val = 0.0;
  if (cs.dim == 1) {
    const double fx = v[i0];
    const double snd = (v[g.wrap(i0 + 1)] - 2.0 * fx + v[g.wrap(i0 - 1)]) / (h * h);
    val += 0.5 * cs.m2sing[0] * snd;
    double acc = 0.0, compx = 0.0;
    for (const CompiledStencil::Node1& e : cs.n1) {
      int j = i0 + e.o;
      if (j >= n) j -= n;
      int j1 = j + 1;
      if (j1 >= n) j1 -= n;
      acc += e.w * ((1.0 - e.t) * v[j] + e.t * v[j1] - fx);
      compx += e.wz0;
    }
    val += acc - grad[0] * compx + (fmean - fx) * cs.tail_mass;
  } else {
    const std::size_t id = g.index(i0, i1);
    const double fx = v[id];
    const double s0 =
        (v[g.index(i0 + 1, i1)] - 2.0 * fx + v[g.index(i0 - 1, i1)]) / (h * h);
    const double s1 =
        (v[g.index(i0, i1 + 1)] - 2.0 * fx + v[g.index(i0, i1 - 1)]) / (h * h);
    const double sx = (v[g.index(i0 + 1, i1 + 1)] - v[g.index(i0 + 1, i1 - 1)] -
                       v[g.index(i0 - 1, i1 + 1)] + v[g.index(i0 - 1, i1 - 1)]) /
                      (4.0 * h * h);
    val += 0.5 * cs.m2sing[0] * s0 + 0.5 * cs.m2sing[1] * s1 + cs.m2sing[2] * sx;
    double acc = 0.0, compx = 0.0, compy = 0.0;
    for (const CompiledStencil::Node2& e : cs.n2) {
      const int a0 = g.wrap(i0 + e.o0), a1 = g.wrap(i1 + e.o1);
      const int b0 = a0 + 1 == n ? 0 : a0 + 1, b1 = a1 + 1 == n ? 0 : a1 + 1;
      const double v00 = v[static_cast<std::size_t>(a0) * n + a1];
      const double v01 = v[static_cast<std::size_t>(a0) * n + b1];
      const double v10 = v[static_cast<std::size_t>(b0) * n + a1];
      const double v11 = v[static_cast<std::size_t>(b0) * n + b1];
      const double fa = v00 + e.t1 * (v01 - v00);
      const double fb = v10 + e.t1 * (v11 - v10);
      acc += e.w * (fa + e.t0 * (fb - fa) - fx);
      compx += e.wz0;
      compy += e.wz1;
    }
    val += acc - grad[0] * compx - grad[1] * compy + (fmean - fx) * cs.tail_mass;
  }
  return val;
}

GridFunction fractional_laplacian_half(const GridFunction& f) {
  const TorusGrid& g = f.grid();
  if (!is_power_of_two(g.n))
    throw ValidationError("fractional_laplacian_half: n must be a power of two");
  const int n = g.n;
  auto mult = [&](int j) {
    const int k = j <= n / 2 ? j : j - n;
    return 2.0 * M_PI * std::abs(double(k));
  };
  if (g.dim == 1) {
    std::vector<std::complex<double>> a(n);
    for (int i = 0; i < n; ++i) a[i] = f[i];
    fft(a);
    for (int j = 0; j < n; ++j) a[j] *= mult(j);
    ifft(a);
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) out[i] = a[i].real();
    return f.with_values(std::move(out));
  }
  // 2d: transform rows then columns, apply |2 pi (k0,k1)|
  std::vector<std::complex<double>> a(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) a[i] = f[i];
  std::vector<std::complex<double>> tmp(n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) tmp[c] = a[std::size_t(r) * n + c];
    fft(tmp);
    for (int c = 0; c < n; ++c) a[std::size_t(r) * n + c] = tmp[c];
  }
  for (int c = 0; c < n; ++c) {
    for (int r = 0; r < n; ++r) tmp[r] = a[std::size_t(r) * n + c];
    fft(tmp);
    for (int r = 0; r < n; ++r) a[std::size_t(r) * n + c] = tmp[r];
  }
  for (int r = 0; r < n; ++r) {
    const int k0 = r <= n / 2 ? r : r - n;
    for (int c = 0; c < n; ++c) {
      const int k1 = c <= n / 2 ? c : c - n;
      a[std::size_t(r) * n + c] *=
          2.0 * M_PI * std::sqrt(double(k0) * k0 + double(k1) * k1);
    }
  }
  for (int c = 0; c < n; ++c) {
    for (int r = 0; r < n; ++r) tmp[r] = a[std::size_t(r) * n + c];
    ifft(tmp);
    for (int r = 0; r < n; ++r) a[std::size_t(r) * n + c] = tmp[r];
  }
  std::vector<double> out(g.size());
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) tmp[c] = a[std::size_t(r) * n + c];
    ifft(tmp);
    for (int c = 0; c < n; ++c) out[std::size_t(r) * n + c] = tmp[c].real();
  }
  return f.with_values(std::move(out));
}

std::vector<double> half_laplacian_row(int n) {
  std::vector<double> row(n, 0.0);
  for (int j = 0; j < n; ++j) {
    const int k = j <= n / 2 ? j : j - n;
    const double m = 2.0 * M_PI * std::abs(double(k));
    for (int i = 0; i < n; ++i)
      row[i] += m * std::cos(2.0 * M_PI * k * i / double(n)) / n;
  }
  return row;
}

double half_laplacian_diagonal(const TorusGrid& g) {
  const int n = g.n;
  double s = 0.0;
  if (g.dim == 1) {
    for (int j = 0; j < n; ++j) {
      const int k = j <= n / 2 ? j : j - n;
      s += 2.0 * M_PI * std::abs(double(k));
    }
    return s / n;
  }
  for (int r = 0; r < n; ++r) {
    const int k0 = r <= n / 2 ? r : r - n;
    for (int c = 0; c < n; ++c) {
      const int k1 = c <= n / 2 ? c : c - n;
      s += 2.0 * M_PI * std::sqrt(double(k0) * k0 + double(k1) * k1);
    }
  }
  return s / (double(n) * n);
}

static double pucci_impl(const LevyKernel& k, const GridFunction& f,
                         const Point& x, const Point& grad, bool inner_sup,
                         const StencilOptions& opt) {
  const double fmean = f.mean();
  double outer = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < k.num_controls(); ++a) {
    double inner = inner_sup ? -std::numeric_limits<double>::infinity()
                             : std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < k.fast_grid().size(); ++i) {
      const Stencil st = build_stencil(k, a, k.fast_grid().point(i), f.grid(), opt);
      const double v = apply_levy(st, f, x, grad, fmean);
      inner = inner_sup ? std::max(inner, v) : std::min(inner, v);
    }
    outer = std::max(outer, inner);
  }
  return outer;
}

double pucci_plus(const LevyKernel& k, const GridFunction& f, const Point& x,
                  const Point& grad, const StencilOptions& opt) {
  return pucci_impl(k, f, x, grad, true, opt);
}

double pucci_minus(const LevyKernel& k, const GridFunction& f, const Point& x,
                   const Point& grad, const StencilOptions& opt) {
  return pucci_impl(k, f, x, grad, false, opt);
}

double calibrate_half_laplacian_scale(const TorusGrid& grid,
                                      const StencilOptions& opt) {
  if (grid.dim != 1)
    throw ValidationError("calibrate_half_laplacian_scale: 1d grids only");
  LevyKernel unit(KernelFamily::Separable, 1, grid,
                  {KernelControlParams{TrigPoly2::constant(1.0), {}, {}}}, true,
                  8.0, 1.0);
  const Stencil st = build_stencil(unit, 0, Point{0.0, 0.0}, grid, opt);
  std::vector<double> vals(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i)
    vals[i] = std::cos(2.0 * M_PI * grid.point(i)[0]);
  const GridFunction f(grid, std::move(vals));
  const double fmean = f.mean();
  double coef = 0.0;  // projection of -apply_levy onto the cosine mode
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Point x = grid.point(i);
    const Point grad{-2.0 * M_PI * std::sin(2.0 * M_PI * x[0]), 0.0};
    coef += -apply_levy(st, f, x, grad, fmean) * std::cos(2.0 * M_PI * x[0]);
  }
  coef *= 2.0 / double(grid.n);
  return 2.0 * M_PI / coef;
}

StencilCache::StencilCache(const LevyKernel& k, TorusGrid grid,
                           StencilOptions opt)
    : kernel_(k), grid_(grid), opt_(opt) {}

std::pair<Stencil, CompiledStencil>& StencilCache::ensure(int a,
                                                          std::size_t xi_index) {
  const auto key = std::make_pair(a, xi_index);
  auto it = store_.find(key);
  if (it == store_.end()) {
    Stencil st =
        build_stencil(kernel_, a, kernel_.fast_grid().point(xi_index), grid_, opt_);
    CompiledStencil cs = compile_stencil(st, grid_);
    it = store_.emplace(key, std::make_pair(std::move(st), std::move(cs))).first;
  }
  return it->second;
}

const CompiledStencil& StencilCache::get(int a, std::size_t xi_index) {
  std::lock_guard<std::mutex> lock(mu_);
  return ensure(a, xi_index).second;
}

const Stencil& StencilCache::get_raw(int a, std::size_t xi_index) {
  std::lock_guard<std::mutex> lock(mu_);
  return ensure(a, xi_index).first;
}

}  // namespace levyhomog
