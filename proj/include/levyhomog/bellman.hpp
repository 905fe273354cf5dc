#pragma once

#include <memory>
#include <vector>

#include "levyhomog/grid.hpp"
#include "levyhomog/kernels.hpp"
#include "levyhomog/nonlocal.hpp"
#include "levyhomog/trigpoly.hpp"

namespace levyhomog {

struct ControlSpec {
  TrigPoly2 cost;                      // f^a(x, xi)
  std::array<TrigPoly2, 2> drift;      // b^a(x, xi) per axis
};

struct HolderData {
  double alpha = 1.0;
  double beta = 1.0;
  double C_f = 0.0;
  double C_b = 0.0;
};

/// The full Bellman datum: finite control list, drift and cost families,
/// kernel family, Holder metadata, slow and fast grids.
struct ProblemData {
  int dim = 1;
  TorusGrid slow_grid;
  TorusGrid fast_grid;
  std::vector<ControlSpec> controls;
  std::shared_ptr<LevyKernel> kernel;
  HolderData holder;

  int num_controls() const { return static_cast<int>(controls.size()); }
  double cost(int a, const Point& x, const Point& xi) const {
    return controls[a].cost.eval(x, xi);
  }
  double drift(int a, int axis, const Point& x, const Point& xi) const {
    return controls[a].drift[axis].eval(x, xi);
  }
  /// sup over controls and a dense (x, xi) lattice of |b| / |f|.
  double sup_b() const;
  double sup_f() const;
  void validate() const;
};

/// Bellman data resolved onto one grid: per-node cost/drift tables plus the
/// nonlocal operator in one of three forms. rhs() evaluates
/// sup_a { -I^a u - b^a . D_up u - f^a } per node; not concurrently callable
/// on one instance (it owns scratch buffers).
///
/// Forms:
///  - Stencils: one compiled quadrature stencil per (control, node).
///  - Spectral: I^a = -kfac (-Delta)^{1/2}, multiplier |2 pi k|.
///  - Factored (1d): separable kernels k^a(xi) K0(z); the K0 convolution is
///    evaluated once per sweep through its exact Fourier multiplier and scaled
///    by kfac per control. Same linear operator as the stencil form.
class DiscreteBellman {
 public:
  enum class Form { None, Stencils, Spectral, Factored };

  TorusGrid grid;
  int m = 0;
  Form form = Form::None;
  std::vector<std::vector<double>> f;                     // [a][node]
  std::vector<std::array<std::vector<double>, 2>> b;      // [a][axis][node]
  std::vector<std::vector<const CompiledStencil*>> stencil;  // [a][node]
  std::vector<std::vector<double>> kfac;                  // [a][node]
  double spectral_diag = 0.0;
  std::shared_ptr<const CompiledStencil> k0;              // Factored
  void build_factored_multiplier();

  void rhs(const std::vector<double>& u, std::vector<double>& out) const;
  /// Monotonicity budget: max over controls and nodes of the total explicit
  /// stencil weight (nonlocal + drift), excluding the discount.
  double cfl_coefficient() const;
  double sup_f_table() const;
  DiscreteBellman with_scaled_cost(double s) const;

 private:
  void factored_convolution(const std::vector<double>& u) const;

  std::vector<double> multiplier_;       // Factored: per-mode symbol of K0
  mutable std::vector<double> scratch_;  // nonlocal table refreshed per sweep
};

struct StationaryOptions {
  double tol = 1e-7;
  long max_iters = 200000;
  bool accelerate_mean = true;
  double tau_override = 0.0;  // 0 = derive from the CFL bound
  double cfl_safety = 0.9;
  bool throw_on_budget = true;
};

struct StationaryResult {
  GridFunction psi;
  long iters = 0;
  double residual = 0.0;
  double tau = 0.0;
  double cfl_coefficient = 0.0;
  bool converged = false;
};

/// Explicit monotone pseudo-time iteration for
///   delta psi + sup_a { -I^a psi - b^a . D psi - f^a } = 0
/// with an exact constant-mode correction per sweep. Enforces the discrete
/// bound ||psi|| <= sup_a ||f^a|| / delta on exit.
StationaryResult solve_stationary_discounted(const DiscreteBellman& db,
                                             double delta,
                                             const StationaryOptions& opt = {},
                                             const GridFunction* warm = nullptr);

/// Lockstep variant: both systems advance with one shared step size and sweep
/// count, so ordered sources yield ordered iterates to roundoff.
std::pair<StationaryResult, StationaryResult> solve_stationary_pair(
    const DiscreteBellman& db1, const DiscreteBellman& db2, double delta,
    const StationaryOptions& opt = {});

struct ParabolicOptions {
  double tau = 0.0;  // 0 = derive from the CFL bound
  double cfl_safety = 0.9;
};

struct ParabolicSolution {
  double tau = 0.0;
  double cfl_coefficient = 0.0;
  std::vector<double> times;
  std::vector<GridFunction> snapshots;
  std::vector<double> sup_trace;
};

/// Explicit Euler u <- u - tau * rhs(u), snapshots at the requested times.
/// Errors on CFL violation or on leaving the barrier ||u0|| + M t.
ParabolicSolution solve_parabolic(const DiscreteBellman& db,
                                  const GridFunction& u0, double T,
                                  const std::vector<double>& snapshot_times,
                                  const ParabolicOptions& opt = {});

/// Oscillatory tables f^a(x, x/eps), b^a(x, x/eps) on solve_grid with kernel
/// phases resolved against the fast grid. eps = 1 is the unscaled problem.
DiscreteBellman assemble_oscillatory(const ProblemData& data,
                                     const TorusGrid& solve_grid, double eps,
                                     StencilCache& stencils);

/// The Bellman Hamiltonian H(x, xi, p, u) with a caller-supplied gradient.
double hamiltonian(const ProblemData& data, const Point& x, const Point& xi,
                   const Point& p, const GridFunction& u, const Point& grad_used);

struct ScalingProbeRow {
  double scale = 1.0;
  double lip = 0.0;
  long iters = 0;
};

/// Solves the stationary problem with the cost replaced by s * f per scale and
/// reports the measured Lipschitz seminorms.
std::vector<ScalingProbeRow> lipschitz_scaling_probe(
    const DiscreteBellman& base, double delta, const std::vector<double>& scales,
    const StationaryOptions& opt = {});

}  // namespace levyhomog
