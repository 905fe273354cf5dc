#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "levyhomog/grid.hpp"
#include "levyhomog/kernels.hpp"

namespace levyhomog {

namespace quad {

// 4-point Gauss-Legendre on [-1, 1].
inline constexpr std::array<double, 4> kGlNodes = {
    -0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
    0.8611363115940526};
inline constexpr std::array<double, 4> kGlWeights = {
    0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
    0.3478548451374538};

/// Shell boundaries ascending from r_lo to r_hi, 2^{1/per_octave} ratio,
/// with extra split radii inserted where they fall inside the range.
std::vector<double> shell_edges(double r_lo, double r_hi, int per_octave,
                                const std::vector<double>& splits);

/// Integral of f over the annulus {r_lo <= |z| <= r_hi} (d=1: both signs;
/// d=2: full circle split into `sectors`), shell-subdivided.
template <class F>
double integrate_annulus(int dim, double r_lo, double r_hi, int per_octave,
                         int sectors, F&& f) {
  if (r_hi <= r_lo) return 0.0;
  const std::vector<double> edges = shell_edges(r_lo, r_hi, per_octave, {});
  double total = 0.0;
  for (std::size_t s = 0; s + 1 < edges.size(); ++s) {
    const double a = edges[s], b = edges[s + 1];
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    if (dim == 1) {
      for (int side = 0; side < 2; ++side) {
        const double sgn = side == 0 ? 1.0 : -1.0;
        for (int q = 0; q < 4; ++q) {
          const double r = mid + half * kGlNodes[q];
          total += half * kGlWeights[q] * f(Point{sgn * r, 0.0});
        }
      }
    } else {
      const double dth = 2.0 * M_PI / sectors;
      for (int j = 0; j < sectors; ++j) {
        const double th0 = j * dth, thm = th0 + 0.5 * dth, thh = 0.5 * dth;
        for (int q = 0; q < 4; ++q) {
          const double r = mid + half * kGlNodes[q];
          const double wr = half * kGlWeights[q] * r;
          for (int qa = 0; qa < 2; ++qa) {
            const double th =
                thm + thh * (qa == 0 ? -0.5773502691896257 : 0.5773502691896257);
            total += wr * thh * f(Point{r * std::cos(th), r * std::sin(th)});
          }
        }
      }
    }
  }
  return total;
}

/// Integral of f(zhat) over the unit sphere (d=1: two signs; d=2: trapezoid,
/// spectrally accurate for smooth densities).
template <class F>
double integrate_unit_sphere(int dim, F&& f) {
  if (dim == 1) return f(Point{1.0, 0.0}) + f(Point{-1.0, 0.0});
  const int m = 256;
  double s = 0.0;
  for (int j = 0; j < m; ++j) {
    const double th = 2.0 * M_PI * j / m;
    s += f(Point{std::cos(th), std::sin(th)});
  }
  return s * 2.0 * M_PI / m;
}

}  // namespace quad

struct StencilOptions {
  double rho_sing = 0.0;  // 0: use grid spacing h
  double R_max = 8.0;
  int per_octave = 8;
  int angular_sectors = 64;
};

/// One sampling cell (shell x sector): kernel-weighted centroid and mass.
struct StencilNode {
  double z0 = 0.0, z1 = 0.0;
  double w = 0.0;
  bool in_ball = false;
};

/// Quadrature of the compensated Levy operator at a fixed (kernel, control,
/// fast phase) on a fixed grid: singular second moments below rho_sing,
/// centroid sampling cells up to R_max, analytic or estimated tail beyond.
struct Stencil {
  int dim = 1;
  double h = 0.0;
  double rho_sing = 0.0;
  double R_max = 8.0;
  std::vector<StencilNode> nodes;
  std::array<double, 3> m2sing{0.0, 0.0, 0.0};  // xx, yy, xy
  std::array<double, 2> comp{0.0, 0.0};         // total first moment inside B
  double tail_mass = 0.0;
  double tail_err = 0.0;
  double total_mass = 0.0;  // sum of node weights

  /// Monotonicity budget of the nonlocal part: total absolute off-diagonal
  /// weight of the explicit update (drift excluded).
  double cfl_budget() const;
};

Stencil build_stencil(const LevyKernel& k, int a, const Point& xi,
                      const TorusGrid& grid, const StencilOptions& opt = {});

/// Node-aligned form: offsets and interpolation weights resolved against a
/// grid so the solver inner loop is table lookups.
struct CompiledStencil {
  int dim = 1;
  std::array<double, 3> m2sing{0.0, 0.0, 0.0};
  double tail_mass = 0.0;
  double cfl = 0.0;
  // d=1: value += w * ((1-t) v[i+o] + t v[i+o+1] - v[i]) - grad0 * wz0
  struct Node1 {
    int o;
    double t, w, wz0;
  };
  std::vector<Node1> n1;
  struct Node2 {
    int o0, o1;
    double t0, t1, w, wz0, wz1;
  };
  std::vector<Node2> n2;
};

CompiledStencil compile_stencil(const Stencil& s, const TorusGrid& grid);

}  // namespace levyhomog
