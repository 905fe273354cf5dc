#pragma once

#include <optional>
#include <vector>

#include "levyhomog/bellman.hpp"

namespace levyhomog {

enum class CellBranch { Symmetric, Nonsymmetric };

/// Discrete stand-in for the local C^2 data of u near the freeze point.
struct LocalC2Data {
  double value = 0.0;
  Point gradient{0.0, 0.0};
  std::array<double, 3> second{0.0, 0.0, 0.0};  // xx, yy, xy
  double sup_second_in_ball = 0.0;
  double sup_u = 0.0;
};

/// Frozen data (x, p, snapshot of u) with the derived source and drift tables
/// on the fast grid, tagged by the kernel branch.
struct CellProblem {
  Point x{0.0, 0.0};
  Point p{0.0, 0.0};
  CellBranch branch = CellBranch::Symmetric;
  TorusGrid fast;
  double rho = 0.5;
  std::vector<std::vector<double>> ftilde;                // [a][xi]
  std::vector<std::array<std::vector<double>, 2>> btilde; // [a][axis][xi]
  std::vector<std::vector<double>> kfac0;                 // Kns: k^a(xi, 0)
  LocalC2Data local;
  double alpha = 1.0, beta = 1.0, gamma = 1.0;
  int dim = 1;
  int m = 0;
};

/// Shared context for many cell solves over one ProblemData: stencil stores on
/// the fast and slow grids and the drift-correction tables.
class CellWorkbench {
 public:
  explicit CellWorkbench(const ProblemData& data, StencilOptions opt = {});

  const ProblemData& data() const { return *data_; }
  StencilCache& fast_stencils() { return fast_stencils_; }
  StencilCache& slow_stencils() { return slow_stencils_; }

  /// b_K^a at every fast node (Kns kernels only; lazily built).
  const std::vector<std::vector<Point>>& drift_correction_table();
  /// Quadrature of the factored separable kernel K0 = |z|^{-(d+1)} on the slow
  /// grid (the reduction fast path); null for other families.
  const CompiledStencil* k0_slow_stencil();
  const Stencil* k0_slow_raw();
  /// Shared K0 stencil on the fast grid, for the factored cell operator.
  std::shared_ptr<const CompiledStencil> k0_fast_stencil();

  double nonlocal_sensitivity_slow();  // max over (a, xi) of the slow-stencil budget

 private:
  const ProblemData* data_;
  StencilOptions opt_;
  StencilCache fast_stencils_;
  StencilCache slow_stencils_;
  std::mutex mu_;
  bool bk_built_ = false;
  std::vector<std::vector<Point>> bk_;
  std::shared_ptr<LevyKernel> k0_kernel_;
  std::optional<Stencil> k0_raw_;
  std::optional<CompiledStencil> k0_;
  std::shared_ptr<const CompiledStencil> k0_fast_;
  double nl_sens_ = -1.0;
};

/// Tabulates ftilde^a(xi) = f^a(x,xi) + b^a(x,xi).p + L^a(x,xi,u) and the cell
/// drift on the fast grid; derives the branch from the kernel.
CellProblem build_cell_problem(CellWorkbench& wb, const Point& x, const Point& p,
                               const GridFunction& u, double rho,
                               std::optional<CellBranch> require_branch = {});

/// Separable fast path: the u-dependence enters only through the scalar
/// nonlocal feature ell = L_{K0}(x, u).
CellProblem build_cell_problem_from_feature(CellWorkbench& wb, const Point& x,
                                            const Point& p, double ell,
                                            const LocalC2Data& local, double rho);

LocalC2Data local_c2_data(const GridFunction& u, const Point& x, double rho);

struct EffectiveEvaluation {
  double lambda = 0.0;
  GridFunction corrector;
  std::vector<double> deltas;
  std::vector<double> lambda_seq;
  std::vector<double> residuals;
  double lambda_mean_diag = 0.0;  // -delta_last * <psi>
  double lip_measured = 0.0;
  bool converged = false;
  long total_iters = 0;
};

struct CellSolveOptions {
  double tol = 1e-7;
  long max_iters = 200000;
  std::size_t anchor_index = 0;
  double cfl_safety = 0.9;
};

/// Vanishing-discount ladder with warm starts and first-order Richardson
/// extrapolation of lambda_k = -delta_k psi^{delta_k}(anchor).
EffectiveEvaluation solve_cell(CellWorkbench& wb, const CellProblem& cp,
                               const std::vector<double>& delta_sequence,
                               const CellSolveOptions& opt = {},
                               const GridFunction* warm = nullptr);

/// ||D^2 u|| rho + |Du(x)| |ln rho| + ||u|| / rho, the middle term dropped on
/// the symmetric branch.
double c_rho_constant(const CellProblem& cp);

struct CorrectorLipReport {
  double lip_measured = 0.0;
  double c_rho = 0.0;
  double growth = 0.0;     // (1 + |p| + C_rho)^{1/(1+sigma)}
  double implied_C = 0.0;  // lip / growth
  double sigma = 0.0;
};

CorrectorLipReport corrector_lipschitz_report(const EffectiveEvaluation& ev,
                                              const CellProblem& cp, double sigma);

/// The 1 or 2 scalars that reconstruct L^a(x, xi, u) = k^a(xi) * ell for the
/// factored separable family (one shared feature, reported per control).
std::vector<double> separable_features(CellWorkbench& wb, const Point& x,
                                       const GridFunction& u);

}  // namespace levyhomog
