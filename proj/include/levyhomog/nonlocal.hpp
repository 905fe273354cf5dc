#pragma once

#include <map>
#include <mutex>

#include "levyhomog/grid.hpp"
#include "levyhomog/kernels.hpp"
#include "levyhomog/quadrature.hpp"

namespace levyhomog {

/// Compensated Levy operator at x using a prebuilt stencil. `grad` is the
/// caller's discrete gradient at x (it feeds the compensator), `fmean` the
/// nodal mean of f for the tail estimate.
double apply_levy(const Stencil& st, const GridFunction& f, const Point& x,
                  const Point& grad, double fmean);

/// Convenience form that builds the stencil for (a, xi) on f's grid.
double apply_levy(const LevyKernel& k, int a, const Point& xi,
                  const GridFunction& f, const Point& x, const Point& grad,
                  const StencilOptions& opt = {});

/// Hot-path form on grid nodes with a compiled stencil.
double apply_compiled(const CompiledStencil& cs, const TorusGrid& g,
                      const std::vector<double>& v, int i0, int i1,
                      const Point& grad, double fmean);

/// Spectral (-Delta)^{1/2} through the Fourier multiplier |2 pi k|; exact for
/// band-limited data. Requires a power-of-two grid.
GridFunction fractional_laplacian_half(const GridFunction& f);

/// Dense row of the spectral half-Laplacian on a 1d grid of size n;
/// row[j] is the coefficient of u_{i+j} in ((-Delta)^{1/2} u)_i.
std::vector<double> half_laplacian_row(int n);

/// Diagonal entry of the spectral half-Laplacian (mean of the multipliers);
/// the off-diagonal budget of the monotone update equals this again.
double half_laplacian_diagonal(const TorusGrid& g);

/// Extremal operators over controls and the fast grid.
double pucci_plus(const LevyKernel& k, const GridFunction& f, const Point& x,
                  const Point& grad, const StencilOptions& opt = {});
double pucci_minus(const LevyKernel& k, const GridFunction& f, const Point& x,
                   const Point& grad, const StencilOptions& opt = {});

/// Scale c with c*|z|^{-(d+1)} matching the Fourier multiplier on the first
/// mode of the given grid.
double calibrate_half_laplacian_scale(const TorusGrid& grid,
                                      const StencilOptions& opt = {});

/// Shared stencil store keyed by (control, fast-grid node).
class StencilCache {
 public:
  StencilCache(const LevyKernel& k, TorusGrid grid, StencilOptions opt = {});
  const CompiledStencil& get(int a, std::size_t xi_index);
  const Stencil& get_raw(int a, std::size_t xi_index);
  const TorusGrid& grid() const { return grid_; }

 private:
  std::pair<Stencil, CompiledStencil>& ensure(int a, std::size_t xi_index);

  const LevyKernel& kernel_;
  TorusGrid grid_;
  StencilOptions opt_;
  std::mutex mu_;
  std::map<std::pair<int, std::size_t>, std::pair<Stencil, CompiledStencil>> store_;
};

}  // namespace levyhomog
