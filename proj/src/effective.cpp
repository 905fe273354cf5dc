#include "levyhomog/effective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "levyhomog/errors.hpp"
#include "levyhomog/util.hpp"

namespace levyhomog {

std::size_t EffectiveOperator::KeyHash::operator()(const Key& k) const {
  std::uint64_t h = fnv1a(&k.x0, sizeof(k.x0));
  h = fnv1a(&k.x1, sizeof(k.x1), h);
  h = fnv1a(&k.p0, sizeof(k.p0), h);
  h = fnv1a(&k.p1, sizeof(k.p1), h);
  h = fnv1a(&k.ufp, sizeof(k.ufp), h);
  return static_cast<std::size_t>(h);
}

EffectiveOperator::EffectiveOperator(const ProblemData& data, EffectiveOptions opt)
    : data_(&data), opt_(std::move(opt)), wb_(data) {
  data.validate();
  sup_b_ = data.sup_b();
}

bool EffectiveOperator::separable_path() const {
  const LevyKernel& k = *data_->kernel;
  return k.family() == KernelFamily::Separable &&
         k.zprofile().type == ZProfile::Type::None;
}

double EffectiveOperator::quantize_p(double v) const {
  if (opt_.p_quantum <= 0.0) return v;
  return std::round(v / opt_.p_quantum) * opt_.p_quantum;
}

static std::int64_t lattice_index(double v, double q) {
  if (q <= 0.0) {
    std::int64_t out;
    static_assert(sizeof(out) == sizeof(v));
    std::memcpy(&out, &v, sizeof(v));
    return out;
  }
  return static_cast<std::int64_t>(std::llround(v / q));
}

double EffectiveOperator::solve_key(const Point& x, const Point& pq, double ellq,
                                    bool reduced, const GridFunction* u,
                                    const LocalC2Data& local,
                                    EffectiveEvaluation* detail) {
  CellProblem cp =
      reduced ? build_cell_problem_from_feature(wb_, x, pq, ellq, local, opt_.rho)
              : build_cell_problem(wb_, x, pq, *u, opt_.rho);
  CellSolveOptions copt;
  copt.tol = opt_.tol;
  copt.max_iters = opt_.max_iters;
  EffectiveEvaluation ev = solve_cell(wb_, cp, opt_.delta_ladder, copt);
  const double lambda = ev.lambda;
  if (detail) *detail = std::move(ev);
  return lambda;
}

double EffectiveOperator::lookup_or_solve(const Key& key, const Point& x,
                                          const Point& pq, double ellq,
                                          bool reduced, const GridFunction* u,
                                          const LocalC2Data& local,
                                          EffectiveEvaluation* detail) {
  if (opt_.use_cache && !detail) {
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = cache_.find(key);
      if (it != cache_.end()) {
        ++stats_.hits;
        return it->second;
      }
      ++stats_.misses;
    }
    const double lambda = solve_key(x, pq, ellq, reduced, u, local, nullptr);
    std::lock_guard<std::mutex> lock(mu_);
    cache_[key] = lambda;  // identical keys produce identical values
    return lambda;
  }
  if (opt_.use_cache) {
    std::lock_guard<std::mutex> lock(mu_);
    ++stats_.misses;
  }
  return solve_key(x, pq, ellq, reduced, u, local, detail);
}

double EffectiveOperator::eval(const Point& x, const Point& p,
                               const GridFunction& u,
                               EffectiveEvaluation* detail) {
  const Point pq{quantize_p(p[0]), data_->dim == 2 ? quantize_p(p[1]) : 0.0};
  Key key;
  key.x0 = lattice_index(x[0], 1e-12);
  key.x1 = data_->dim == 2 ? lattice_index(x[1], 1e-12) : 0;
  key.p0 = lattice_index(pq[0], opt_.p_quantum);
  key.p1 = data_->dim == 2 ? lattice_index(pq[1], opt_.p_quantum) : 0;

  if (separable_path()) {
    const double ell = separable_features(wb_, x, u)[0];
    const double ellq = opt_.ell_quantum > 0.0
                            ? std::round(ell / opt_.ell_quantum) * opt_.ell_quantum
                            : ell;
    const std::int64_t li = lattice_index(ellq, opt_.ell_quantum);
    key.ufp = fnv1a(&li, sizeof(li));
    const LocalC2Data local = local_c2_data(u, x, opt_.rho);
    return lookup_or_solve(key, x, pq, ellq, true, nullptr, local, detail);
  }
  // generic path: pure memoization on the exact nodal values and local data
  const LocalC2Data local = local_c2_data(u, x, opt_.rho);
  std::uint64_t h = fnv1a_doubles(u.values().data(), u.size());
  h = fnv1a(&local, sizeof(local), h);
  h = fnv1a(&opt_.rho, sizeof(double), h);
  key.ufp = h;
  return lookup_or_solve(key, x, pq, 0.0, false, &u, local, detail);
}

double EffectiveOperator::eval_reduced(const Point& x, const Point& p, double ell,
                                       const LocalC2Data& local,
                                       EffectiveEvaluation* detail) {
  if (!separable_path())
    throw ValidationError("eval_reduced: kernel is not factored separable");
  const Point pq{quantize_p(p[0]), data_->dim == 2 ? quantize_p(p[1]) : 0.0};
  const double ellq = opt_.ell_quantum > 0.0
                          ? std::round(ell / opt_.ell_quantum) * opt_.ell_quantum
                          : ell;
  Key key;
  key.x0 = lattice_index(x[0], 1e-12);
  key.x1 = data_->dim == 2 ? lattice_index(x[1], 1e-12) : 0;
  key.p0 = lattice_index(pq[0], opt_.p_quantum);
  key.p1 = data_->dim == 2 ? lattice_index(pq[1], opt_.p_quantum) : 0;
  const std::int64_t li = lattice_index(ellq, opt_.ell_quantum);
  key.ufp = fnv1a(&li, sizeof(li));
  return lookup_or_solve(key, x, pq, ellq, true, nullptr, local, detail);
}

CacheStats EffectiveOperator::cache_stats() const {
  std::lock_guard<std::mutex> lock(mu_);
  return stats_;
}

void EffectiveOperator::clear_cache() {
  std::lock_guard<std::mutex> lock(mu_);
  cache_.clear();
  stats_ = {};
}

// ---------------------------------------------------------------- properties

PropertyCheck check_global_comparison(
    EffectiveOperator& op, const Point& x, const Point& p,
    const std::vector<std::pair<GridFunction, GridFunction>>& pairs,
    double tol2) {
  PropertyCheck pc;
  pc.name = "global_comparison";
  pc.threshold = tol2;
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& [u1, u2] : pairs) {
    const double at_x1 = u1.sample_at(x), at_x2 = u2.sample_at(x);
    if (std::abs(at_x1 - at_x2) > 1e-10)
      throw ValidationError("check_global_comparison: pair must touch at x");
    for (std::size_t i = 0; i < u1.size(); ++i)
      if (u1[i] > u2[i] + 1e-12)
        throw ValidationError("check_global_comparison: pair not ordered");
    const double h1 = op.eval(x, p, u1);
    const double h2 = op.eval(x, p, u2);
    pc.details.push_back(h1 - h2);
    worst = std::max(worst, h2 - h1);  // violation when h2 > h1
  }
  pc.worst = worst;
  pc.pass = worst <= tol2;
  return pc;
}

PropertyCheck check_convexity_in_u(EffectiveOperator& op, const Point& x,
                                   const Point& p, const GridFunction& u1,
                                   const GridFunction& u2,
                                   const std::vector<double>& s_list,
                                   double tol2) {
  PropertyCheck pc;
  pc.name = "convexity_in_u";
  pc.threshold = tol2;
  const double h1 = op.eval(x, p, u1);
  const double h2 = op.eval(x, p, u2);
  double worst = -std::numeric_limits<double>::infinity();
  for (double s : s_list) {
    if (!(s > 0.0 && s < 1.0))
      throw ValidationError("check_convexity_in_u: s must lie in (0,1)");
    std::vector<double> mix(u1.size());
    for (std::size_t i = 0; i < mix.size(); ++i)
      mix[i] = s * u1[i] + (1.0 - s) * u2[i];
    const double hs = op.eval(x, p, GridFunction(u1.grid(), std::move(mix)));
    const double gap = hs - (s * h1 + (1.0 - s) * h2);
    pc.details.push_back(gap);
    worst = std::max(worst, gap);
  }
  pc.worst = worst;
  pc.pass = worst <= tol2;
  return pc;
}

PropertyCheck check_lipschitz_in_p(EffectiveOperator& op, const Point& x,
                                   const GridFunction& u,
                                   const std::vector<double>& p_list) {
  if (p_list.size() < 2)
    throw ValidationError("check_lipschitz_in_p: need at least two p values");
  PropertyCheck pc;
  pc.name = "lipschitz_in_p";
  pc.threshold = op.sup_b() + 1e-2;
  std::vector<double> lambdas;
  for (double pv : p_list) lambdas.push_back(op.eval(x, Point{pv, 0.0}, u));
  double worst = 0.0;
  for (std::size_t i = 0; i < p_list.size(); ++i)
    for (std::size_t j = i + 1; j < p_list.size(); ++j) {
      const double dd =
          std::abs(lambdas[i] - lambdas[j]) / std::abs(p_list[i] - p_list[j]);
      pc.details.push_back(dd);
      worst = std::max(worst, dd);
    }
  pc.worst = worst;
  pc.pass = worst <= pc.threshold;
  return pc;
}

static double torus_dist(const Point& a, const Point& b, int dim) {
  double s = 0.0;
  for (int ax = 0; ax < dim; ++ax) {
    double t = std::abs(a[ax] - b[ax]);
    t -= std::floor(t);
    t = std::min(t, 1.0 - t);
    s += t * t;
  }
  return std::sqrt(s);
}

PropertyCheck check_holder_in_x(EffectiveOperator& op, const Point& p,
                                const TrigPoly2& u_analytic, double sigma,
                                const std::vector<double>& scales,
                                std::uint64_t seed) {
  PropertyCheck pc;
  pc.name = "holder_in_x";
  const TorusGrid& g = op.data().slow_grid;
  std::vector<double> vals(g.size());
  for (std::size_t i = 0; i < g.size(); ++i)
    vals[i] = u_analytic.eval_x(g.point(i));
  const GridFunction u(g, std::move(vals));

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> fitted;
  for (double scale : scales) {
    double cfit = 0.0;
    for (int rep = 0; rep < 4; ++rep) {
      // base points on the grid so the scale is exact on the torus
      const int i0 = static_cast<int>(unif(rng) * g.n);
      const int shift = std::max(1, static_cast<int>(std::round(scale * g.n)));
      const Point x1 = g.point(g.wrap(i0), 0);
      const Point x2 = g.point(g.wrap(i0 + shift), 0);
      const double h1 = op.eval(x1, p, u);
      const double h2 = op.eval(x2, p, u);
      const double d = torus_dist(x1, x2, op.data().dim);
      cfit = std::max(cfit, std::abs(h1 - h2) / std::pow(d, sigma));
    }
    fitted.push_back(cfit);
    pc.details.push_back(cfit);
  }
  double lo = *std::min_element(fitted.begin(), fitted.end());
  double hi = *std::max_element(fitted.begin(), fitted.end());
  if (lo <= 1e-9) lo = 1e-9;  // x-independent data: constants are all ~0
  pc.worst = hi / lo;
  pc.threshold = 3.0;
  pc.pass = hi <= 1e-9 || pc.worst <= pc.threshold;
  pc.note = "fitted Holder constants per separation scale";
  return pc;
}

std::pair<double, double> effective_growth_bound(
    EffectiveOperator& op, const Point& x1, const Point& x2, const Point& p1,
    const Point& p2, const GridFunction& u1, const GridFunction& u2, double rho,
    double sigma, double C) {
  const int dim = op.data().dim;
  const double h1 = op.eval(x1, p1, u1);
  const double h2 = op.eval(x2, p2, u2);
  const double lhs = h2 - h1;

  const LocalC2Data loc1 = local_c2_data(u1, x1, rho);
  CellProblem probe;  // only for the C_rho formula
  probe.branch = op.data().kernel->symmetric() ? CellBranch::Symmetric
                                               : CellBranch::Nonsymmetric;
  probe.rho = rho;
  probe.local = loc1;
  probe.dim = dim;
  const double c_rho = c_rho_constant(probe);

  double pmag1 = std::abs(p1[0]);
  double dp = std::abs(p1[0] - p2[0]);
  if (dim == 2) {
    pmag1 = std::hypot(p1[0], p1[1]);
    dp = std::hypot(p1[0] - p2[0], p1[1] - p2[1]);
  }
  const double dx = torus_dist(x1, x2, dim);
  const double expo = std::min(op.data().holder.alpha, op.data().holder.beta);

  // sup over controls and the fast grid of -L(x2,.,u2) + L(x1,.,u1)
  const double m1 = u1.mean(), m2 = u2.mean();
  Point g1{0.0, 0.0}, g2{0.0, 0.0};
  const double h = u1.grid().h();
  for (int ax = 0; ax < dim; ++ax) {
    Point xp = x1, xm = x1;
    xp[ax] += h;
    xm[ax] -= h;
    g1[ax] = (u1.sample_at(xp) - u1.sample_at(xm)) / (2.0 * h);
    xp = x2;
    xm = x2;
    xp[ax] += h;
    xm[ax] -= h;
    g2[ax] = (u2.sample_at(xp) - u2.sample_at(xm)) / (2.0 * h);
  }
  double sup_nl = -std::numeric_limits<double>::infinity();
  CellWorkbench& wb = op.workbench();
  const TorusGrid& fg = op.data().fast_grid;
  for (int a = 0; a < op.data().num_controls(); ++a)
    for (std::size_t j = 0; j < fg.size(); ++j) {
      const Stencil& st = wb.slow_stencils().get_raw(a, j);
      const double l1 = apply_levy(st, u1, x1, g1, m1);
      const double l2 = apply_levy(st, u2, x2, g2, m2);
      sup_nl = std::max(sup_nl, -l2 + l1);
    }

  const double rhs = C *
                         (std::pow(1.0 + pmag1 + c_rho, 1.0 / (1.0 + sigma)) +
                          (1.0 + pmag1)) *
                         std::pow(dx, expo) +
                     op.sup_b() * dp + sup_nl;
  return {lhs, rhs};
}

namespace {

struct GrowthCase {
  Point x1, x2, p1, p2;
  GridFunction u1, u2;
};

GrowthCase random_growth_case(const TorusGrid& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto random_u = [&]() {
    std::vector<double> v(g.size());
    const double a1 = unif(rng) - 0.5, a2 = 0.5 * (unif(rng) - 0.5);
    const double ph1 = unif(rng), ph2 = unif(rng);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double x = g.point(i)[0];
      v[i] = a1 * std::cos(2.0 * M_PI * (x + ph1)) +
             a2 * std::cos(4.0 * M_PI * (x + ph2));
    }
    return GridFunction(g, std::move(v));
  };
  GrowthCase c{Point{g.point(int(unif(rng) * g.n), 0)[0], 0.0},
               Point{g.point(int(unif(rng) * g.n), 0)[0], 0.0},
               Point{std::round((2.0 * unif(rng) - 1.0) * 1e3) / 1e3, 0.0},
               Point{std::round((2.0 * unif(rng) - 1.0) * 1e3) / 1e3, 0.0},
               random_u(), random_u()};
  return c;
}

}  // namespace

PropertyCheck growth_bound_suite(EffectiveOperator& op, std::uint64_t seed,
                                 int n_calibration, int n_validation) {
  PropertyCheck pc;
  pc.name = "growth_bound";
  const TorusGrid& g = op.data().slow_grid;
  const double rho = op.options().rho;
  const double sigma = op.options().sigma;
  std::mt19937_64 rng(seed);

  double C = 0.0;
  for (int i = 0; i < n_calibration; ++i) {
    GrowthCase c = random_growth_case(g, rng);
    auto [lhs, rhs0] = effective_growth_bound(op, c.x1, c.x2, c.p1, c.p2, c.u1,
                                              c.u2, rho, sigma, 0.0);
    const double dx = torus_dist(c.x1, c.x2, op.data().dim);
    if (dx < 1e-9) continue;
    const LocalC2Data loc1 = local_c2_data(c.u1, c.x1, rho);
    CellProblem probe;
    probe.branch = op.data().kernel->symmetric() ? CellBranch::Symmetric
                                                 : CellBranch::Nonsymmetric;
    probe.rho = rho;
    probe.local = loc1;
    probe.dim = op.data().dim;
    double pmag1 = std::abs(c.p1[0]);
    const double bracket =
        std::pow(1.0 + pmag1 + c_rho_constant(probe), 1.0 / (1.0 + sigma)) +
        (1.0 + pmag1);
    const double expo =
        std::min(op.data().holder.alpha, op.data().holder.beta);
    const double needed = (lhs - rhs0) / (bracket * std::pow(dx, expo));
    C = std::max(C, needed);
  }
  C = std::max(C, 0.0) * 1.05 + 1e-9;  // frozen after calibration

  double worst = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n_validation; ++i) {
    GrowthCase c = random_growth_case(g, rng);
    auto [lhs, rhs] = effective_growth_bound(op, c.x1, c.x2, c.p1, c.p2, c.u1,
                                             c.u2, rho, sigma, C);
    pc.details.push_back(lhs - rhs);
    worst = std::max(worst, lhs - rhs);
  }
  pc.worst = worst;
  pc.threshold = 2.0 * op.options().tol;
  pc.pass = worst <= pc.threshold;
  pc.note = "C fitted on calibration batch, frozen for validation";
  return pc;
}

// ------------------------------------------------------- effective parabolic

double effective_cfl_coefficient(EffectiveOperator& op, const TorusGrid& grid) {
  const double h = grid.h();
  return 2.0 * op.sup_b() / h + op.workbench().nonlocal_sensitivity_slow();
}

namespace {

/// Godunov value on one axis: endpoint max for shocks, lattice ternary search
/// for rarefaction fans (lambda is convex in p).
double godunov_axis(EffectiveOperator& op, const Point& x, double dminus,
                    double dplus, double ell, const LocalC2Data& local) {
  auto value = [&](double pv) {
    return op.eval_reduced(x, Point{pv, 0.0}, ell, local);
  };
  if (dminus >= dplus) return std::max(value(dminus), value(dplus));
  const double q = std::max(op.options().p_quantum, 1e-9);
  long lo = static_cast<long>(std::floor(dminus / q));
  long hi = static_cast<long>(std::ceil(dplus / q));
  auto at = [&](long i) { return value(double(i) * q); };
  double vlo = at(lo), vhi = at(hi);
  while (hi - lo > 2) {
    const long m1 = lo + (hi - lo) / 3;
    const long m2 = hi - (hi - lo) / 3;
    const double v1 = at(m1), v2 = at(m2);
    if (v1 < v2) {
      hi = m2;
      vhi = v2;
    } else if (v2 < v1) {
      lo = m1;
      vlo = v1;
    } else {
      lo = m1;
      hi = m2;
      vlo = v1;
      vhi = v2;
    }
  }
  double best = std::min(vlo, vhi);
  for (long i = lo + 1; i < hi; ++i) best = std::min(best, at(i));
  return best;
}

}  // namespace

ParabolicSolution solve_effective_parabolic(EffectiveOperator& op,
                                            const GridFunction& u0, double T,
                                            const std::vector<double>& snapshot_times,
                                            const ParabolicOptions& popt) {
  if (op.data().dim != 1)
    throw ValidationError("solve_effective_parabolic: 1d only at desk scale");
  if (!op.separable_path())
    throw ValidationError(
        "solve_effective_parabolic: general kernels are supported through "
        "eval(); the time stepper requires the separable fast path");
  const TorusGrid& g = u0.grid();
  ParabolicSolution sol;
  sol.cfl_coefficient = effective_cfl_coefficient(op, g);
  const double tau_max = popt.cfl_safety / sol.cfl_coefficient;

  std::vector<double> times = snapshot_times;
  std::erase_if(times, [](double t) { return !(t > 0.0); });
  std::sort(times.begin(), times.end());
  if (times.empty() || times.back() < T) times.push_back(T);
  double unit = times.front();
  for (std::size_t i = 0; i + 1 < times.size(); ++i)
    unit = std::min(unit, times[i + 1] - times[i]);
  const long per_unit = static_cast<long>(std::ceil(unit / tau_max - 1e-12));
  const double tau = popt.tau > 0.0 ? popt.tau : unit / double(per_unit);
  if (tau * sol.cfl_coefficient > 1.0 + 1e-12)
    throw SolverError("solve_effective_parabolic: CFL violation");
  for (double t : times) {
    const double steps = t / tau;
    if (std::abs(steps - std::round(steps)) > 1e-6)
      throw ValidationError(
          "solve_effective_parabolic: snapshot times must be multiples of tau");
  }
  sol.tau = tau;

  const double M = op.data().sup_f();
  const double barrier0 = u0.max_abs();
  const double h = g.h();

  std::vector<double> u = u0.values();
  std::vector<double> unew(u.size());
  const long total_steps = static_cast<long>(std::llround(times.back() / tau));
  std::size_t next_snap = 0;
  for (long k = 0; k <= total_steps; ++k) {
    const double t = double(k) * tau;
    if (next_snap < times.size() && std::abs(t - times[next_snap]) < 0.5 * tau) {
      GridFunction snap(g, u);
      if (!snap.all_finite())
        throw SolverError("solve_effective_parabolic: non-finite state");
      sol.times.push_back(times[next_snap]);
      sol.sup_trace.push_back(snap.max_abs());
      sol.snapshots.push_back(std::move(snap));
      ++next_snap;
    }
    if (k == total_steps) break;

    const GridFunction ucur(g, u);
    const double umean = ucur.mean();
    const double usup = ucur.max_abs();
    const Stencil* k0 = op.workbench().k0_slow_raw();
    parallel_for(g.size(), [&](std::size_t i) {
      const int i0 = static_cast<int>(i);
      const Point x = g.point(i);
      const double dminus = (u[i] - u[g.wrap(i0 - 1)]) / h;
      const double dplus = (u[g.wrap(i0 + 1)] - u[i]) / h;
      const Point cgrad{(dminus + dplus) / 2.0, 0.0};
      const double ell = apply_levy(*k0, ucur, x, cgrad, umean);
      // diagnostics-only local data; lambda depends on (x, p, ell) alone
      LocalC2Data local;
      local.value = u[i];
      local.gradient = cgrad;
      local.second[0] = (dplus - dminus) / h;
      local.sup_second_in_ball = std::abs(local.second[0]);
      local.sup_u = usup;
      const double H = godunov_axis(op, x, dminus, dplus, ell, local);
      unew[i] = u[i] - tau * H;
    });
    u.swap(unew);
    const double bound = barrier0 + M * (t + tau) + 1e-6;
    double s = 0.0;
    for (double v : u) s = std::max(s, std::abs(v));
    if (s > bound)
      throw SolverError("solve_effective_parabolic: left the barrier ||u0|| + M t");
  }
  return sol;
}

}  // namespace levyhomog
