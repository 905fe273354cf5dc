#include "levyhomog/quadrature.hpp"

#include <algorithm>
#include <cmath>

#include "levyhomog/errors.hpp"

namespace levyhomog {

namespace quad {

std::vector<double> shell_edges(double r_lo, double r_hi, int per_octave,
                                const std::vector<double>& splits) {
  if (!(r_lo > 0.0) || !(r_hi > r_lo))
    throw ValidationError("shell_edges: need 0 < r_lo < r_hi");
  const double ratio = std::pow(2.0, 1.0 / per_octave);
  std::vector<double> edges;
  double r = r_lo;
  while (r < r_hi * (1.0 - 1e-12)) {
    edges.push_back(r);
    r *= ratio;
  }
  edges.push_back(r_hi);
  for (double s : splits) {
    if (s > r_lo * (1.0 + 1e-12) && s < r_hi * (1.0 - 1e-12))
      edges.push_back(s);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end(),
                          [](double a, double b) {
                            return std::abs(a - b) < 1e-14 * std::max(a, b);
                          }),
              edges.end());
  return edges;
}

}  // namespace quad

namespace {

struct CellMoments {
  double w = 0.0;
  std::array<double, 2> m1{0.0, 0.0};
  std::array<double, 3> m2{0.0, 0.0, 0.0};
};

template <class K>
void accumulate_cell_1d(double a, double b, double sgn, K&& kernel,
                        CellMoments& cm) {
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  for (int q = 0; q < 4; ++q) {
    const double r = mid + half * quad::kGlNodes[q];
    const double z = sgn * r;
    const double kv = kernel(Point{z, 0.0});
    const double wq = half * quad::kGlWeights[q] * kv;
    cm.w += wq;
    cm.m1[0] += wq * z;
    cm.m2[0] += wq * z * z;
  }
}

template <class K>
void accumulate_cell_2d(double a, double b, double th0, double th1, K&& kernel,
                        CellMoments& cm) {
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  const double thm = 0.5 * (th0 + th1), thh = 0.5 * (th1 - th0);
  constexpr double g2 = 0.5773502691896257;
  for (int q = 0; q < 4; ++q) {
    const double r = mid + half * quad::kGlNodes[q];
    for (int qa = 0; qa < 2; ++qa) {
      const double th = thm + thh * (qa == 0 ? -g2 : g2);
      const double z0 = r * std::cos(th), z1 = r * std::sin(th);
      const double kv = kernel(Point{z0, z1});
      const double wq = half * quad::kGlWeights[q] * thh * r * kv;
      cm.w += wq;
      cm.m1[0] += wq * z0;
      cm.m1[1] += wq * z1;
      cm.m2[0] += wq * z0 * z0;
      cm.m2[1] += wq * z1 * z1;
      cm.m2[2] += wq * z0 * z1;
    }
  }
}

}  // namespace

double Stencil::cfl_budget() const {
  const double h2 = h * h;
  double b = total_mass + tail_mass;
  b += (m2sing[0] + (dim == 2 ? m2sing[1] : 0.0)) / h2;
  if (dim == 2) b += std::abs(m2sing[2]) / h2;
  for (int a = 0; a < dim; ++a) b += std::abs(comp[a]) / h;
  return b;
}

Stencil build_stencil(const LevyKernel& k, int a, const Point& xi,
                      const TorusGrid& grid, const StencilOptions& opt) {
  Stencil st;
  st.dim = grid.dim;
  st.h = grid.h();
  st.R_max = opt.R_max;
  double rho = opt.rho_sing > 0.0 ? opt.rho_sing : st.h;
  rho = std::min(1.0, std::max(rho, st.h / 2.0));
  st.rho_sing = rho;

  auto kv = [&](const Point& z) { return k.evaluate(a, xi, z); };
  const int sectors = grid.dim == 1 ? 2 : opt.angular_sectors;

  // Singular zone: ratio-1/2 shells from rho down to h/4, then a geometric
  // extrapolation of the remainder for (d+1)-homogeneous behaviour at 0.
  {
    const double r_min = st.h / 4.0;
    std::vector<double> edges;
    double r = rho;
    while (r > r_min * (1.0 + 1e-12)) {
      edges.push_back(r);
      r = std::max(r / 2.0, r_min);
    }
    edges.push_back(r_min);
    std::reverse(edges.begin(), edges.end());
    CellMoments innermost;
    for (std::size_t s = 0; s + 1 < edges.size(); ++s) {
      CellMoments cm;
      if (grid.dim == 1) {
        accumulate_cell_1d(edges[s], edges[s + 1], +1.0, kv, cm);
        accumulate_cell_1d(edges[s], edges[s + 1], -1.0, kv, cm);
      } else {
        const double dth = 2.0 * M_PI / sectors;
        for (int j = 0; j < sectors; ++j)
          accumulate_cell_2d(edges[s], edges[s + 1], j * dth, (j + 1) * dth, kv,
                             cm);
      }
      for (int c = 0; c < 3; ++c) st.m2sing[c] += cm.m2[c];
      if (s == 0) innermost = cm;
    }
    // below r_min the shells keep halving, so their total matches the
    // innermost computed shell
    for (int c = 0; c < 3; ++c) st.m2sing[c] += innermost.m2[c];
  }

  // Sampling zone: centroid cells from rho to R_max, split exactly at |z| = 1.
  {
    const std::vector<double> edges =
        quad::shell_edges(rho, opt.R_max, opt.per_octave, {1.0});
    const double dth = 2.0 * M_PI / sectors;
    for (std::size_t s = 0; s + 1 < edges.size(); ++s) {
      const bool in_ball = edges[s + 1] <= 1.0 + 1e-12;
      for (int j = 0; j < sectors; ++j) {
        CellMoments cm;
        if (grid.dim == 1)
          accumulate_cell_1d(edges[s], edges[s + 1], j == 0 ? 1.0 : -1.0, kv,
                             cm);
        else
          accumulate_cell_2d(edges[s], edges[s + 1], j * dth, (j + 1) * dth, kv,
                             cm);
        if (cm.w <= 0.0) continue;
        StencilNode node;
        node.w = cm.w;
        node.z0 = cm.m1[0] / cm.w;
        node.z1 = cm.m1[1] / cm.w;
        node.in_ball = in_ball;
        st.nodes.push_back(node);
        st.total_mass += cm.w;
        if (in_ball) {
          st.comp[0] += cm.m1[0];
          st.comp[1] += cm.m1[1];
        }
      }
    }
  }

  // Tail: exact for homogeneous families, frozen-factor estimate otherwise.
  {
    const double ang = quad::integrate_unit_sphere(
        grid.dim, [&](const Point& zh) { return k.unit_sphere_density(a, xi, zh); });
    if (k.homogeneous()) {
      st.tail_mass = ang / opt.R_max;
      st.tail_err = 0.0;
    } else {
      const double R = opt.R_max;
      auto at_radius = [&](double r) {
        return quad::integrate_unit_sphere(grid.dim, [&](const Point& zh) {
          return k.evaluate(a, xi, Point{r * zh[0], r * zh[1]}) *
                 std::pow(r, grid.dim + 1);
        });
      };
      const double aR = at_radius(R);
      const double a2R = at_radius(2.0 * R);
      const double a4R = at_radius(4.0 * R);
      st.tail_mass = aR / R;
      const double spread = std::max({std::abs(aR - a2R), std::abs(aR - a4R)});
      st.tail_err = spread / R;
    }
  }
  return st;
}

CompiledStencil compile_stencil(const Stencil& s, const TorusGrid& grid) {
  CompiledStencil c;
  c.dim = s.dim;
  c.m2sing = s.m2sing;
  c.tail_mass = s.tail_mass;
  c.cfl = s.cfl_budget();
  const double h = grid.h();
  if (s.dim == 1) {
    c.n1.reserve(s.nodes.size());
    for (const StencilNode& nd : s.nodes) {
      const double t = nd.z0 / h;
      const double fl = std::floor(t);
      CompiledStencil::Node1 e;
      e.o = static_cast<int>(fl) % grid.n;
      if (e.o < 0) e.o += grid.n;
      e.t = t - fl;
      e.w = nd.w;
      e.wz0 = nd.in_ball ? nd.w * nd.z0 : 0.0;
      c.n1.push_back(e);
    }
  } else {
    c.n2.reserve(s.nodes.size());
    for (const StencilNode& nd : s.nodes) {
      const double t0 = nd.z0 / h, t1 = nd.z1 / h;
      const double f0 = std::floor(t0), f1 = std::floor(t1);
      CompiledStencil::Node2 e;
      e.o0 = static_cast<int>(f0) % grid.n;
      if (e.o0 < 0) e.o0 += grid.n;
      e.o1 = static_cast<int>(f1) % grid.n;
      if (e.o1 < 0) e.o1 += grid.n;
      e.t0 = t0 - f0;
      e.t1 = t1 - f1;
      e.w = nd.w;
      e.wz0 = nd.in_ball ? nd.w * nd.z0 : 0.0;
      e.wz1 = nd.in_ball ? nd.w * nd.z1 : 0.0;
      c.n2.push_back(e);
    }
  }
  return c;
}

}  // namespace levyhomog
