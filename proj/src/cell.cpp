#include "levyhomog/cell.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "levyhomog/errors.hpp"
#include "levyhomog/fft.hpp"

namespace levyhomog {

CellWorkbench::CellWorkbench(const ProblemData& data, StencilOptions opt)
    : data_(&data),
      opt_(opt),
      fast_stencils_(*data.kernel, data.fast_grid, opt),
      slow_stencils_(*data.kernel, data.slow_grid, opt) {
  data.validate();
}

const std::vector<std::vector<Point>>& CellWorkbench::drift_correction_table() {
  std::lock_guard<std::mutex> lock(mu_);
  if (!bk_built_) {
    const LevyKernel& k = *data_->kernel;
    if (!k.kns_form())
      throw ValidationError("drift_correction_table: kernel is not Kns-form");
    bk_.assign(data_->num_controls(),
               std::vector<Point>(data_->fast_grid.size(), Point{0.0, 0.0}));
    for (int a = 0; a < data_->num_controls(); ++a)
      for (std::size_t j = 0; j < data_->fast_grid.size(); ++j)
        bk_[a][j] = drift_correction(k, a, data_->fast_grid.point(j)).value;
    bk_built_ = true;
  }
  return bk_;
}

const CompiledStencil* CellWorkbench::k0_slow_stencil() {
  std::lock_guard<std::mutex> lock(mu_);
  const LevyKernel& k = *data_->kernel;
  if (k.family() != KernelFamily::Separable ||
      k.zprofile().type != ZProfile::Type::None)
    return nullptr;
  if (!k0_) {
    k0_kernel_ = std::make_shared<LevyKernel>(
        KernelFamily::Separable, data_->dim, data_->fast_grid,
        std::vector<KernelControlParams>{
            KernelControlParams{TrigPoly2::constant(1.0), {}, {}}},
        true, k.C_K(), k.gamma());
    k0_raw_ = build_stencil(*k0_kernel_, 0, Point{0.0, 0.0}, data_->slow_grid, opt_);
    k0_ = compile_stencil(*k0_raw_, data_->slow_grid);
  }
  return &*k0_;
}

const Stencil* CellWorkbench::k0_slow_raw() {
  if (!k0_slow_stencil()) return nullptr;
  std::lock_guard<std::mutex> lock(mu_);
  return &*k0_raw_;
}

std::shared_ptr<const CompiledStencil> CellWorkbench::k0_fast_stencil() {
  if (!k0_slow_stencil()) return nullptr;  // also builds k0_kernel_
  std::lock_guard<std::mutex> lock(mu_);
  if (!k0_fast_) {
    const Stencil st =
        build_stencil(*k0_kernel_, 0, Point{0.0, 0.0}, data_->fast_grid, opt_);
    k0_fast_ = std::make_shared<CompiledStencil>(
        compile_stencil(st, data_->fast_grid));
  }
  return k0_fast_;
}

double CellWorkbench::nonlocal_sensitivity_slow() {
  {
    std::lock_guard<std::mutex> lock(mu_);
    if (nl_sens_ >= 0.0) return nl_sens_;
  }
  double worst = 0.0;
  if (const CompiledStencil* cs = k0_slow_stencil()) {
    double fac = 0.0;
    for (int a = 0; a < data_->num_controls(); ++a)
      for (std::size_t j = 0; j < data_->fast_grid.size(); ++j)
        fac = std::max(fac, std::abs(data_->kernel->zfactor_at_zero(
                                a, data_->fast_grid.point(j))));
    worst = fac * cs->cfl;
  } else {
    for (int a = 0; a < data_->num_controls(); ++a)
      for (std::size_t j = 0; j < data_->fast_grid.size(); ++j)
        worst = std::max(worst, slow_stencils_.get(a, j).cfl);
  }
  std::lock_guard<std::mutex> lock(mu_);
  nl_sens_ = worst;
  return worst;
}

LocalC2Data local_c2_data(const GridFunction& u, const Point& x, double rho) {
  LocalC2Data d;
  const TorusGrid& g = u.grid();
  const double h = g.h();
  d.value = u.sample_at(x);
  d.sup_u = u.max_abs();
  for (int ax = 0; ax < g.dim; ++ax) {
    Point xp = x, xm = x;
    xp[ax] += h;
    xm[ax] -= h;
    d.gradient[ax] = (u.sample_at(xp) - u.sample_at(xm)) / (2.0 * h);
    d.second[ax] = (u.sample_at(xp) - 2.0 * d.value + u.sample_at(xm)) / (h * h);
  }
  if (g.dim == 2) {
    const Point pp{x[0] + h, x[1] + h}, pm{x[0] + h, x[1] - h};
    const Point mp{x[0] - h, x[1] + h}, mm{x[0] - h, x[1] - h};
    d.second[2] = (u.sample_at(pp) - u.sample_at(pm) - u.sample_at(mp) +
                   u.sample_at(mm)) /
                  (4.0 * h * h);
  }
  // sup of second differences over the nodes of B_rho(x), torus distance
  auto torus_dist = [](double a, double b) {
    double t = std::abs(a - b);
    t -= std::floor(t);
    return std::min(t, 1.0 - t);
  };
  const int n = g.n;
  const int n1 = g.dim == 2 ? n : 1;
  double sup2 = 0.0;
  for (int i0 = 0; i0 < n; ++i0)
    for (int i1 = 0; i1 < n1; ++i1) {
      const Point y = g.point(i0, i1);
      double dist2 = torus_dist(y[0], x[0]) * torus_dist(y[0], x[0]);
      if (g.dim == 2) dist2 += torus_dist(y[1], x[1]) * torus_dist(y[1], x[1]);
      if (dist2 > rho * rho) continue;
      const double sxx = (u.at(i0 + 1, i1) - 2.0 * u.at(i0, i1) + u.at(i0 - 1, i1)) / (h * h);
      sup2 = std::max(sup2, std::abs(sxx));
      if (g.dim == 2) {
        const double syy =
            (u.at(i0, i1 + 1) - 2.0 * u.at(i0, i1) + u.at(i0, i1 - 1)) / (h * h);
        const double sxy = (u.at(i0 + 1, i1 + 1) - u.at(i0 + 1, i1 - 1) -
                            u.at(i0 - 1, i1 + 1) + u.at(i0 - 1, i1 - 1)) /
                           (4.0 * h * h);
        sup2 = std::max({sup2, std::abs(syy), std::abs(sxy)});
      }
    }
  d.sup_second_in_ball = sup2;
  return d;
}

static CellBranch derive_branch(const LevyKernel& k) {
  if (k.symmetric()) return CellBranch::Symmetric;
  if (k.kns_form()) return CellBranch::Nonsymmetric;
  throw ValidationError(
      "cell problem: kernel admits neither the symmetric nor the Kns cell "
      "operator");
}

static void fill_common(CellWorkbench& wb, CellProblem& cp, const Point& x,
                        const Point& p) {
  const ProblemData& data = wb.data();
  cp.x = x;
  cp.p = p;
  cp.fast = data.fast_grid;
  cp.dim = data.dim;
  cp.m = data.num_controls();
  cp.alpha = data.holder.alpha;
  cp.beta = data.holder.beta;
  cp.gamma = data.kernel->gamma();
  const std::size_t N = cp.fast.size();
  cp.ftilde.assign(cp.m, std::vector<double>(N, 0.0));
  cp.btilde.assign(cp.m, {std::vector<double>(N, 0.0), std::vector<double>(N, 0.0)});
  for (int a = 0; a < cp.m; ++a)
    for (std::size_t j = 0; j < N; ++j) {
      const Point xi = cp.fast.point(j);
      cp.ftilde[a][j] = data.cost(a, x, xi);
      for (int ax = 0; ax < cp.dim; ++ax) {
        cp.ftilde[a][j] += data.drift(a, ax, x, xi) * p[ax];
        cp.btilde[a][ax][j] = data.drift(a, ax, x, xi);
      }
    }
  if (cp.branch == CellBranch::Nonsymmetric) {
    const auto& bk = wb.drift_correction_table();
    cp.kfac0.assign(cp.m, std::vector<double>(N, 0.0));
    for (int a = 0; a < cp.m; ++a)
      for (std::size_t j = 0; j < N; ++j) {
        cp.kfac0[a][j] =
            data.kernel->zfactor_at_zero(a, cp.fast.point(j));
        for (int ax = 0; ax < cp.dim; ++ax)
          cp.btilde[a][ax][j] += bk[a][j][ax];
      }
  }
}

CellProblem build_cell_problem(CellWorkbench& wb, const Point& x, const Point& p,
                               const GridFunction& u, double rho,
                               std::optional<CellBranch> require_branch) {
  if (!(rho > 0.0 && rho <= 1.0))
    throw ValidationError("build_cell_problem: rho must lie in (0,1]");
  if (!u.all_finite()) throw ValidationError("build_cell_problem: u not finite");
  const ProblemData& data = wb.data();
  CellProblem cp;
  cp.branch = derive_branch(*data.kernel);
  if (require_branch && *require_branch != cp.branch)
    throw ValidationError("build_cell_problem: branch does not match the kernel");
  cp.rho = rho;
  cp.local = local_c2_data(u, x, rho);
  fill_common(wb, cp, x, p);

  // the nonlocal source term L^a(x, xi, u) with the centered gradient at x
  const double fmean = u.mean();
  const Point grad = cp.local.gradient;
  if (const Stencil* k0_raw = wb.k0_slow_raw()) {
    const double ell = apply_levy(*k0_raw, u, x, grad, fmean);
    for (int a = 0; a < cp.m; ++a)
      for (std::size_t j = 0; j < cp.fast.size(); ++j)
        cp.ftilde[a][j] +=
            data.kernel->zfactor_at_zero(a, cp.fast.point(j)) * ell;
  } else {
    for (int a = 0; a < cp.m; ++a)
      for (std::size_t j = 0; j < cp.fast.size(); ++j) {
        const Stencil& st = wb.slow_stencils().get_raw(a, j);
        cp.ftilde[a][j] += apply_levy(st, u, x, grad, fmean);
      }
  }
  return cp;
}

CellProblem build_cell_problem_from_feature(CellWorkbench& wb, const Point& x,
                                            const Point& p, double ell,
                                            const LocalC2Data& local, double rho) {
  const ProblemData& data = wb.data();
  if (!wb.k0_slow_stencil())
    throw ValidationError(
        "build_cell_problem_from_feature: kernel is not the factored separable "
        "family");
  CellProblem cp;
  cp.branch = derive_branch(*data.kernel);
  cp.rho = rho;
  cp.local = local;
  fill_common(wb, cp, x, p);
  for (int a = 0; a < cp.m; ++a)
    for (std::size_t j = 0; j < cp.fast.size(); ++j)
      cp.ftilde[a][j] += data.kernel->zfactor_at_zero(a, cp.fast.point(j)) * ell;
  return cp;
}

std::vector<double> separable_features(CellWorkbench& wb, const Point& x,
                                       const GridFunction& u) {
  const Stencil* st = wb.k0_slow_raw();
  if (!st)
    throw ValidationError("separable_features: kernel is not factored separable");
  const TorusGrid& g = u.grid();
  const double h = g.h();
  Point grad{0.0, 0.0};
  for (int ax = 0; ax < g.dim; ++ax) {
    Point xp = x, xm = x;
    xp[ax] += h;
    xm[ax] -= h;
    grad[ax] = (u.sample_at(xp) - u.sample_at(xm)) / (2.0 * h);
  }
  const double ell = apply_levy(*st, u, x, grad, u.mean());
  return std::vector<double>(wb.data().num_controls(), ell);
}

static DiscreteBellman cell_bellman(CellWorkbench& wb, const CellProblem& cp) {
  DiscreteBellman db;
  db.grid = cp.fast;
  db.m = cp.m;
  db.f = cp.ftilde;
  db.b = cp.btilde;
  if (cp.branch == CellBranch::Symmetric) {
    std::shared_ptr<const CompiledStencil> k0;
    if (cp.dim == 1 && is_power_of_two(cp.fast.n))
      k0 = wb.k0_fast_stencil();
    if (k0) {
      db.k0 = k0;
      db.kfac.assign(cp.m, std::vector<double>(cp.fast.size(), 0.0));
      for (int a = 0; a < cp.m; ++a)
        for (std::size_t j = 0; j < cp.fast.size(); ++j)
          db.kfac[a][j] = wb.data().kernel->zfactor_at_zero(a, cp.fast.point(j));
      db.build_factored_multiplier();
    } else {
      db.form = DiscreteBellman::Form::Stencils;
      db.stencil.assign(cp.m, std::vector<const CompiledStencil*>(cp.fast.size()));
      for (int a = 0; a < cp.m; ++a)
        for (std::size_t j = 0; j < cp.fast.size(); ++j)
          db.stencil[a][j] = &wb.fast_stencils().get(a, j);
    }
  } else {
    db.form = DiscreteBellman::Form::Spectral;
    db.kfac = cp.kfac0;
    db.spectral_diag = half_laplacian_diagonal(cp.fast);
  }
  return db;
}

EffectiveEvaluation solve_cell(CellWorkbench& wb, const CellProblem& cp,
                               const std::vector<double>& delta_sequence,
                               const CellSolveOptions& opt,
                               const GridFunction* warm) {
  if (delta_sequence.size() < 2)
    throw ValidationError("solve_cell: need at least two discounts");
  for (std::size_t i = 0; i + 1 < delta_sequence.size(); ++i)
    if (!(delta_sequence[i] > delta_sequence[i + 1]))
      throw ValidationError("solve_cell: delta sequence must decrease strictly");
  if (!(delta_sequence.back() > 0.0))
    throw ValidationError("solve_cell: discounts must be positive");
  const std::size_t K = delta_sequence.size();
  const double ratio = delta_sequence[K - 2] / delta_sequence[K - 1];
  if (std::abs(ratio - 2.0) > 1e-9)
    throw ValidationError("solve_cell: last two discounts must differ by 2");

  const DiscreteBellman db = cell_bellman(wb, cp);
  EffectiveEvaluation ev;
  ev.deltas = delta_sequence;

  StationaryOptions sopt;
  sopt.tol = opt.tol;
  sopt.max_iters = opt.max_iters;
  sopt.cfl_safety = opt.cfl_safety;
  GridFunction psi;
  const GridFunction* start = warm;
  for (double delta : delta_sequence) {
    StationaryResult r = solve_stationary_discounted(db, delta, sopt, start);
    psi = std::move(r.psi);
    start = &psi;
    ev.total_iters += r.iters;
    ev.residuals.push_back(r.residual);
    ev.lambda_seq.push_back(-delta * psi[opt.anchor_index]);
  }
  const double lK = ev.lambda_seq[K - 1], lKm = ev.lambda_seq[K - 2];
  ev.lambda = 2.0 * lK - lKm;
  ev.lambda_mean_diag = -delta_sequence.back() * psi.mean();

  // Cauchy diagnostic on the last three gaps
  ev.converged = true;
  if (K >= 4) {
    const double g1 = std::abs(ev.lambda_seq[K - 3] - ev.lambda_seq[K - 4]);
    const double g2 = std::abs(ev.lambda_seq[K - 2] - ev.lambda_seq[K - 3]);
    const double g3 = std::abs(ev.lambda_seq[K - 1] - ev.lambda_seq[K - 2]);
    const double slack = 4.0 * opt.tol;
    if (!(g2 <= g1 + slack && g3 <= g2 + slack)) ev.converged = false;
  }

  std::vector<double> vals = psi.values();
  const double anchor = vals[opt.anchor_index];
  for (double& v : vals) v -= anchor;
  vals[opt.anchor_index] = 0.0;
  ev.corrector = GridFunction(cp.fast, std::move(vals));
  ev.lip_measured = lipschitz_seminorm(ev.corrector);
  return ev;
}

double c_rho_constant(const CellProblem& cp) {
  const double rho = cp.rho;
  double c = cp.local.sup_second_in_ball * rho + cp.local.sup_u / rho;
  if (cp.branch == CellBranch::Nonsymmetric) {
    double gmag = std::abs(cp.local.gradient[0]);
    if (cp.dim == 2) gmag = std::hypot(cp.local.gradient[0], cp.local.gradient[1]);
    c += gmag * std::abs(std::log(rho));
  }
  return c;
}

CorrectorLipReport corrector_lipschitz_report(const EffectiveEvaluation& ev,
                                              const CellProblem& cp, double sigma) {
  const double smax = std::min({cp.alpha, cp.beta, cp.gamma});
  if (!(sigma > 0.0 && sigma < smax))
    throw ValidationError("corrector_lipschitz_report: sigma out of range");
  CorrectorLipReport rep;
  rep.sigma = sigma;
  rep.lip_measured = ev.lip_measured;
  rep.c_rho = c_rho_constant(cp);
  double pmag = std::abs(cp.p[0]);
  if (cp.dim == 2) pmag = std::hypot(cp.p[0], cp.p[1]);
  rep.growth = std::pow(1.0 + pmag + rep.c_rho, 1.0 / (1.0 + sigma));
  rep.implied_C = rep.lip_measured / rep.growth;
  return rep;
}

}  // namespace levyhomog
