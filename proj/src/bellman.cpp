#include "levyhomog/bellman.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>

#include "levyhomog/errors.hpp"
#include "levyhomog/fft.hpp"

namespace levyhomog {

double ProblemData::sup_b() const {
  double s = 0.0;
  const int N = 128;
  for (int a = 0; a < num_controls(); ++a)
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) {
        const Point x{double(i) / N, 0.0}, xi{double(j) / N, 0.0};
        double mag = 0.0;
        for (int ax = 0; ax < dim; ++ax) {
          const double v = controls[a].drift[ax].eval(x, xi);
          mag += v * v;
        }
        s = std::max(s, std::sqrt(mag));
      }
  return s;
}

double ProblemData::sup_f() const {
  double s = 0.0;
  const int N = 128;
  for (int a = 0; a < num_controls(); ++a)
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j)
        s = std::max(s, std::abs(controls[a].cost.eval(Point{double(i) / N, 0.0},
                                                       Point{double(j) / N, 0.0})));
  return s;
}

void ProblemData::validate() const {
  if (controls.empty()) throw ValidationError("ProblemData: empty control list");
  if (!kernel) throw ValidationError("ProblemData: missing kernel");
  if (kernel->dim() != dim) throw ValidationError("ProblemData: kernel dim mismatch");
  if (slow_grid.dim != dim || fast_grid.dim != dim)
    throw ValidationError("ProblemData: grid dim mismatch");
}

// ---------------------------------------------------------------- rhs

void DiscreteBellman::build_factored_multiplier() {
  if (!k0) throw ValidationError("build_factored_multiplier: missing K0 stencil");
  if (grid.dim != 1)
    throw ValidationError("factored form: 1d grids only");
  const int n = grid.n;
  if (!is_power_of_two(n))
    throw ValidationError("factored form: n must be a power of two");
  multiplier_.assign(n, 0.0);
  const double h = grid.h();
  for (int kk = 0; kk < n; ++kk) {
    const double th = 2.0 * M_PI * kk / double(n);
    double re = 0.0;
    for (const CompiledStencil::Node1& e : k0->n1) {
      re += e.w * ((1.0 - e.t) * std::cos(th * e.o) +
                   e.t * std::cos(th * (e.o + 1)) - 1.0);
    }
    re += 0.5 * k0->m2sing[0] * (2.0 * std::cos(th) - 2.0) / (h * h);
    if (kk != 0) re -= k0->tail_mass;
    multiplier_[kk] = re;
  }
  form = Form::Factored;
}

void DiscreteBellman::factored_convolution(const std::vector<double>& u) const {
  const int n = grid.n;
  std::vector<std::complex<double>> a(n);
  for (int i = 0; i < n; ++i) a[i] = u[i];
  fft(a);
  for (int kk = 0; kk < n; ++kk) a[kk] *= multiplier_[kk];
  ifft(a);
  scratch_.resize(n);
  for (int i = 0; i < n; ++i) scratch_[i] = a[i].real();
}

void DiscreteBellman::rhs(const std::vector<double>& u,
                          std::vector<double>& out) const {
  const int n = grid.n;
  const int n1 = grid.dim == 2 ? n : 1;
  const double h = grid.h();
  double fmean = 0.0;
  for (double x : u) fmean += x;
  fmean /= double(u.size());

  if (form == Form::Spectral) {
    GridFunction gf(grid, u);
    scratch_ = fractional_laplacian_half(gf).values();
  } else if (form == Form::Factored) {
    factored_convolution(u);
  }
  double comp0 = 0.0;
  if (form == Form::Factored)
    for (const CompiledStencil::Node1& e : k0->n1) comp0 += e.wz0;

  out.resize(u.size());
  for (int i0 = 0; i0 < n; ++i0) {
    for (int i1 = 0; i1 < n1; ++i1) {
      const std::size_t id = grid.index(i0, i1);
      double best = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < m; ++a) {
        Point grad{0.0, 0.0};
        double drift_term = 0.0;
        for (int ax = 0; ax < grid.dim; ++ax) {
          const int d0 = ax == 0 ? 1 : 0, d1 = ax == 1 ? 1 : 0;
          const double bb = b[a][ax][id];
          const double up = u[grid.index(i0 + d0, i1 + d1)];
          const double dn = u[grid.index(i0 - d0, i1 - d1)];
          double g;
          if (bb > 0.0)
            g = (up - u[id]) / h;
          else if (bb < 0.0)
            g = (u[id] - dn) / h;
          else
            g = (up - dn) / (2.0 * h);
          grad[ax] = g;
          drift_term += bb * g;
        }
        double nl = 0.0;
        if (form == Form::Stencils)
          nl = apply_compiled(*stencil[a][id], grid, u, i0, i1, grad, fmean);
        else if (form == Form::Spectral)
          nl = -kfac[a][id] * scratch_[id];
        else if (form == Form::Factored)
          nl = kfac[a][id] * (scratch_[id] - grad[0] * comp0);
        const double val = -nl - drift_term - f[a][id];
        best = std::max(best, val);
      }
      out[id] = best;
    }
  }
}

double DiscreteBellman::cfl_coefficient() const {
  const double h = grid.h();
  double worst = 0.0;
  for (int a = 0; a < m; ++a) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      double c = 0.0;
      if (form == Form::Stencils)
        c = stencil[a][i]->cfl;
      else if (form == Form::Spectral)
        c = 2.0 * std::abs(kfac[a][i]) * spectral_diag;
      else if (form == Form::Factored)
        c = std::abs(kfac[a][i]) * k0->cfl;
      for (int ax = 0; ax < grid.dim; ++ax) c += std::abs(b[a][ax][i]) / h;
      worst = std::max(worst, c);
    }
  }
  return worst;
}

double DiscreteBellman::sup_f_table() const {
  double s = 0.0;
  for (const auto& fa : f)
    for (double v : fa) s = std::max(s, std::abs(v));
  return s;
}

DiscreteBellman DiscreteBellman::with_scaled_cost(double s) const {
  DiscreteBellman out = *this;
  for (auto& fa : out.f)
    for (double& v : fa) v *= s;
  return out;
}

// ---------------------------------------------------------------- stationary

namespace {

double sup_abs(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s = std::max(s, std::abs(x));
  return s;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / double(v.size());
}

}  // namespace

StationaryResult solve_stationary_discounted(const DiscreteBellman& db,
                                             double delta,
                                             const StationaryOptions& opt,
                                             const GridFunction* warm) {
  if (!(delta > 0.0))
    throw ValidationError("solve_stationary_discounted: delta must be positive");
  StationaryResult res;
  res.cfl_coefficient = db.cfl_coefficient();
  double tau = opt.tau_override > 0.0
                   ? opt.tau_override
                   : opt.cfl_safety / (delta + res.cfl_coefficient);
  if (tau * (delta + res.cfl_coefficient) > 1.0 + 1e-12)
    throw SolverError("solve_stationary_discounted: CFL violation");
  res.tau = tau;

  std::vector<double> u = warm ? warm->values()
                               : std::vector<double>(db.grid.size(), 0.0);
  std::vector<double> r(u.size());
  bool accelerate = opt.accelerate_mean;
  double best_res = std::numeric_limits<double>::infinity();
  long since_best = 0;
  long k = 0;
  for (; k < opt.max_iters; ++k) {
    db.rhs(u, r);
    for (std::size_t i = 0; i < u.size(); ++i) r[i] += delta * u[i];
    const double resnorm = sup_abs(r);
    if (resnorm < best_res * 0.999999) {
      best_res = resnorm;
      since_best = 0;
    } else if (++since_best > 4000 && accelerate) {
      accelerate = false;  // stalled; continue with the plain iteration
      since_best = 0;
    }
    if (resnorm < opt.tol) {
      res.converged = true;
      res.residual = resnorm;
      break;
    }
    if (accelerate) {
      // kill the constant mode exactly: residual(u + s) = residual(u) + delta s
      const double mu = mean_of(r);
      const double shift = -mu / delta;
      for (std::size_t i = 0; i < u.size(); ++i)
        u[i] += shift - tau * (r[i] - mu);
    } else {
      for (std::size_t i = 0; i < u.size(); ++i) u[i] -= tau * r[i];
    }
  }
  res.iters = k;
  if (!res.converged) {
    db.rhs(u, r);
    for (std::size_t i = 0; i < u.size(); ++i) r[i] += delta * u[i];
    res.residual = sup_abs(r);
    if (opt.throw_on_budget) {
      std::ostringstream msg;
      msg << "stationary solver: no convergence in " << opt.max_iters
          << " sweeps (residual " << res.residual << ", tol " << opt.tol << ")";
      throw SolverError(msg.str());
    }
  }
  const double bound = db.sup_f_table() / delta;
  if (sup_abs(u) > bound + opt.tol / delta + 1e-9 * (1.0 + bound))
    throw SolverError("stationary solver: discounted sup-norm bound violated");
  res.psi = GridFunction(db.grid, std::move(u));
  return res;
}

std::pair<StationaryResult, StationaryResult> solve_stationary_pair(
    const DiscreteBellman& db1, const DiscreteBellman& db2, double delta,
    const StationaryOptions& opt) {
  if (!(delta > 0.0)) throw ValidationError("solve_stationary_pair: delta <= 0");
  const double cfl = std::max(db1.cfl_coefficient(), db2.cfl_coefficient());
  const double tau = opt.cfl_safety / (delta + cfl);
  std::vector<double> u1(db1.grid.size(), 0.0), u2(db2.grid.size(), 0.0);
  std::vector<double> r1(u1.size()), r2(u2.size());
  StationaryResult a, bres;
  a.tau = bres.tau = tau;
  a.cfl_coefficient = bres.cfl_coefficient = cfl;
  long k = 0;
  for (; k < opt.max_iters; ++k) {
    db1.rhs(u1, r1);
    db2.rhs(u2, r2);
    for (std::size_t i = 0; i < u1.size(); ++i) r1[i] += delta * u1[i];
    for (std::size_t i = 0; i < u2.size(); ++i) r2[i] += delta * u2[i];
    a.residual = sup_abs(r1);
    bres.residual = sup_abs(r2);
    if (a.residual < opt.tol && bres.residual < opt.tol) {
      a.converged = bres.converged = true;
      break;
    }
    for (std::size_t i = 0; i < u1.size(); ++i) u1[i] -= tau * r1[i];
    for (std::size_t i = 0; i < u2.size(); ++i) u2[i] -= tau * r2[i];
  }
  a.iters = bres.iters = k;
  if (!(a.converged && bres.converged) && opt.throw_on_budget)
    throw SolverError("paired stationary solver: no convergence in budget");
  a.psi = GridFunction(db1.grid, std::move(u1));
  bres.psi = GridFunction(db2.grid, std::move(u2));
  return {std::move(a), std::move(bres)};
}

// ---------------------------------------------------------------- parabolic

ParabolicSolution solve_parabolic(const DiscreteBellman& db,
                                  const GridFunction& u0, double T,
                                  const std::vector<double>& snapshot_times,
                                  const ParabolicOptions& opt) {
  if (!(T > 0.0)) throw ValidationError("solve_parabolic: T must be positive");
  if (!u0.all_finite()) throw ValidationError("solve_parabolic: u0 not finite");
  ParabolicSolution sol;
  sol.cfl_coefficient = db.cfl_coefficient();
  const double tau_max = opt.cfl_safety / std::max(sol.cfl_coefficient, 1e-300);

  std::vector<double> times = snapshot_times;
  std::erase_if(times, [](double t) { return !(t > 0.0); });
  std::sort(times.begin(), times.end());
  if (times.empty() || times.back() < T) times.push_back(T);
  double unit = times.front();
  for (std::size_t i = 0; i + 1 < times.size(); ++i)
    unit = std::min(unit, times[i + 1] - times[i]);
  if (!(unit > 0.0)) throw ValidationError("solve_parabolic: bad snapshot times");
  const long per_unit = static_cast<long>(std::ceil(unit / tau_max - 1e-12));
  double tau = opt.tau > 0.0 ? opt.tau : unit / double(per_unit);
  if (tau * sol.cfl_coefficient > 1.0 + 1e-12)
    throw SolverError("solve_parabolic: CFL violation");
  for (double t : times) {
    const double steps = t / tau;
    if (std::abs(steps - std::round(steps)) > 1e-6)
      throw ValidationError("solve_parabolic: snapshot times must be multiples of tau");
  }
  sol.tau = tau;

  const double M = db.sup_f_table();
  const double barrier0 = u0.max_abs();

  std::vector<double> u = u0.values();
  std::vector<double> r(u.size());
  const long total_steps = static_cast<long>(std::llround(times.back() / tau));
  std::size_t next_snap = 0;
  for (long k = 0; k <= total_steps; ++k) {
    const double t = double(k) * tau;
    if (next_snap < times.size() &&
        std::abs(t - times[next_snap]) < 0.5 * tau) {
      GridFunction snap(db.grid, u);
      if (!snap.all_finite())
        throw SolverError("solve_parabolic: non-finite state");
      sol.times.push_back(times[next_snap]);
      sol.sup_trace.push_back(snap.max_abs());
      sol.snapshots.push_back(std::move(snap));
      ++next_snap;
    }
    if (k == total_steps) break;
    db.rhs(u, r);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] -= tau * r[i];
    const double bound = barrier0 + M * (t + tau) + 1e-6;
    if (sup_abs(u) > bound)
      throw SolverError("solve_parabolic: sup-norm left the barrier ||u0|| + M t");
  }
  return sol;
}

// ---------------------------------------------------------------- assembly

DiscreteBellman assemble_oscillatory(const ProblemData& data,
                                     const TorusGrid& solve_grid, double eps,
                                     StencilCache& stencils) {
  data.validate();
  if (!(eps > 0.0 && eps <= 1.0))
    throw ValidationError("assemble_oscillatory: eps must lie in (0,1]");
  if (!(stencils.grid() == solve_grid))
    throw ValidationError("assemble_oscillatory: stencil cache grid mismatch");
  DiscreteBellman db;
  db.grid = solve_grid;
  db.m = data.num_controls();
  const std::size_t N = solve_grid.size();
  db.f.assign(db.m, std::vector<double>(N, 0.0));
  db.b.assign(db.m, {std::vector<double>(N, 0.0), std::vector<double>(N, 0.0)});

  const LevyKernel& K = *data.kernel;
  const bool factored = K.family() == KernelFamily::Separable &&
                        K.zprofile().type == ZProfile::Type::None &&
                        data.dim == 1 && is_power_of_two(solve_grid.n);
  if (factored) {
    LevyKernel unit(KernelFamily::Separable, 1, data.fast_grid,
                    {KernelControlParams{TrigPoly2::constant(1.0), {}, {}}},
                    true, K.C_K(), K.gamma());
    const Stencil st = build_stencil(unit, 0, Point{0.0, 0.0}, solve_grid);
    db.k0 = std::make_shared<CompiledStencil>(compile_stencil(st, solve_grid));
    db.kfac.assign(db.m, std::vector<double>(N, 0.0));
  } else {
    db.form = DiscreteBellman::Form::Stencils;
    db.stencil.assign(db.m, std::vector<const CompiledStencil*>(N, nullptr));
  }

  const TorusGrid& fg = data.fast_grid;
  for (std::size_t i = 0; i < N; ++i) {
    const Point x = solve_grid.point(i);
    Point xi;
    std::size_t fast_index = 0;
    // fast phase xi = (x / eps) mod 1, required to land on a fast node
    double c0 = x[0] / eps * fg.n;
    double r0 = std::round(c0);
    if (std::abs(c0 - r0) > 1e-7)
      throw ValidationError("assemble_oscillatory: eps not commensurate with grids");
    const int j0 = fg.wrap(static_cast<int>(std::llround(r0)) % fg.n);
    if (solve_grid.dim == 1) {
      fast_index = static_cast<std::size_t>(j0);
    } else {
      double c1 = x[1] / eps * fg.n;
      double r1 = std::round(c1);
      if (std::abs(c1 - r1) > 1e-7)
        throw ValidationError("assemble_oscillatory: eps not commensurate with grids");
      const int j1 = fg.wrap(static_cast<int>(std::llround(r1)) % fg.n);
      fast_index = fg.index(j0, j1);
    }
    xi = fg.point(fast_index);
    for (int a = 0; a < db.m; ++a) {
      db.f[a][i] = data.cost(a, x, xi);
      for (int ax = 0; ax < data.dim; ++ax)
        db.b[a][ax][i] = data.drift(a, ax, x, xi);
      if (factored)
        db.kfac[a][i] = K.zfactor_at_zero(a, xi);
      else
        db.stencil[a][i] = &stencils.get(a, fast_index);
    }
  }
  if (factored) db.build_factored_multiplier();
  return db;
}

double hamiltonian(const ProblemData& data, const Point& x, const Point& xi,
                   const Point& p, const GridFunction& u, const Point& grad_used) {
  double best = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < data.num_controls(); ++a) {
    const double nl = apply_levy(*data.kernel, a, xi, u, x, grad_used);
    double drift_p = 0.0;
    for (int ax = 0; ax < data.dim; ++ax)
      drift_p += data.drift(a, ax, x, xi) * p[ax];
    best = std::max(best, -nl - drift_p - data.cost(a, x, xi));
  }
  return best;
}

std::vector<ScalingProbeRow> lipschitz_scaling_probe(
    const DiscreteBellman& base, double delta, const std::vector<double>& scales,
    const StationaryOptions& opt) {
  std::vector<ScalingProbeRow> rows;
  for (double s : scales) {
    if (!(s >= 1.0))
      throw ValidationError("lipschitz_scaling_probe: scales must be >= 1");
    const DiscreteBellman db = base.with_scaled_cost(s);
    const StationaryResult r = solve_stationary_discounted(db, delta, opt);
    rows.push_back({s, lipschitz_seminorm(r.psi), r.iters});
  }
  return rows;
}

}  // namespace levyhomog
