#include "levyhomog/homog.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "levyhomog/errors.hpp"

namespace levyhomog {

std::vector<Point> sample_lattice(int dim, int points_per_axis) {
  std::vector<Point> pts;
  const int n = points_per_axis;
  if (dim == 1) {
    for (int i = 0; i < n; ++i) pts.push_back(Point{double(i) / n, 0.0});
  } else {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        pts.push_back(Point{double(i) / n, double(j) / n});
  }
  return pts;
}

static GridFunction sample_trig(const TrigPoly2& u0, const TorusGrid& g) {
  std::vector<double> v(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) v[i] = u0.eval_x(g.point(i));
  return GridFunction(g, std::move(v));
}

ConvergenceStudy run_convergence_study(const ProblemData& data,
                                       const TrigPoly2& u0, double T,
                                       const std::vector<double>& eps_list,
                                       const StudyOptions& opt) {
  data.validate();
  if (eps_list.empty())
    throw ValidationError("run_convergence_study: empty eps list");
  for (std::size_t i = 0; i + 1 < eps_list.size(); ++i)
    if (!(eps_list[i] > eps_list[i + 1]))
      throw ValidationError("run_convergence_study: eps list must decrease");

  ConvergenceStudy st;
  st.eps_list = eps_list;
  for (double fr : opt.samples.time_fractions) st.times.push_back(fr * T);
  const std::vector<Point> lattice =
      sample_lattice(data.dim, opt.samples.points_per_axis);

  // effective solve on its own (refined) grid
  const int n_eff = opt.eff_grid_n > 0 ? opt.eff_grid_n : 2 * data.slow_grid.n;
  ProblemData data_eff = data;
  data_eff.slow_grid = TorusGrid(data.dim, n_eff);
  EffectiveOperator op(data_eff, opt.eff);
  st.eff_resolution = n_eff;
  ParabolicSolution eff = solve_effective_parabolic(
      op, sample_trig(u0, data_eff.slow_grid), T, st.times);
  st.tau_eff = eff.tau;
  st.cache = op.cache_stats();

  // oscillatory solves, each on a grid resolving its own eps
  for (double eps : eps_list) {
    const double kd = 1.0 / eps;
    const long k = std::lround(kd);
    if (std::abs(kd - double(k)) > 1e-9 || data.slow_grid.n % k != 0)
      throw ValidationError(
          "run_convergence_study: eps must be the reciprocal of a divisor of "
          "the slow grid");
    int n_eps = std::max<long>(n_eff, k * opt.nodes_per_period);
    // keep solve grids commensurate with the slow grid
    while (n_eps % data.slow_grid.n != 0) ++n_eps;
    const TorusGrid ge(data.dim, n_eps);
    StencilCache cache(*data.kernel, ge);
    DiscreteBellman db = assemble_oscillatory(data, ge, eps, cache);
    ParabolicSolution osc = solve_parabolic(db, sample_trig(u0, ge), T, st.times);
    st.eps_resolution.push_back(n_eps);
    st.tau_eps.push_back(osc.tau);
    std::vector<double> errs;
    for (std::size_t ti = 0; ti < st.times.size(); ++ti)
      errs.push_back(
          sup_norm_diff(osc.snapshots[ti], eff.snapshots[ti], lattice));
    st.errors.push_back(std::move(errs));
  }

  // verdict: per-time monotone decrease with slack; halving on the worst time
  st.has_verdict = eps_list.size() >= 2;
  if (st.has_verdict) {
    bool mono = true;
    for (std::size_t ti = 0; ti < st.times.size(); ++ti)
      for (std::size_t e = 0; e + 1 < eps_list.size(); ++e)
        if (st.errors[e + 1][ti] > (1.0 + opt.monotone_slack) * st.errors[e][ti])
          mono = false;
    st.verdict_monotone = mono;
    const auto agg = [&](std::size_t e) {
      return *std::max_element(st.errors[e].begin(), st.errors[e].end());
    };
    st.halving_ratio = agg(eps_list.size() - 1) / std::max(agg(0), 1e-300);
  }
  return st;
}

// ---------------------------------------------------------- comparison suite

namespace {

TrigPoly2 random_trig(std::mt19937_64& rng, double amp, int kmax) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<TrigTerm> terms;
  for (int k = 1; k <= kmax; ++k) {
    TrigTerm t;
    t.amp = amp * (2.0 * unif(rng) - 1.0) / double(k);
    t.kx = {k, 0};
    t.phase = unif(rng);
    terms.push_back(t);
  }
  return TrigPoly2(std::move(terms));
}

/// Nonnegative random bump: constant dominating the oscillation.
TrigPoly2 random_nonneg(std::mt19937_64& rng, double size) {
  TrigPoly2 osc = random_trig(rng, 0.5 * size, 2);
  return osc.plus_constant(osc.sup_bound() + 0.25 * size);
}

double worst_excess(const GridFunction& u, const GridFunction& v) {
  double w = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < u.size(); ++i) w = std::max(w, u[i] - v[i]);
  return w;
}

}  // namespace

ComparisonReport discrete_comparison_suite(const ProblemData& data, int trials,
                                           std::uint64_t seed,
                                           const ComparisonSuiteOptions& opt) {
  if (trials < 10)
    throw ValidationError("discrete_comparison_suite: need at least 10 trials");
  data.validate();
  ComparisonReport rep;
  rep.trials = trials;
  rep.worst_parabolic = rep.worst_effective = rep.worst_stationary =
      rep.worst_expansiveness = -std::numeric_limits<double>::infinity();

  // shared contexts
  StencilCache osc_cache(*data.kernel, data.slow_grid);
  const DiscreteBellman db_osc =
      assemble_oscillatory(data, data.slow_grid, 1.0, osc_cache);

  ProblemData data_eff = data;
  data_eff.slow_grid = TorusGrid(data.dim, opt.eff_grid_n);
  EffectiveOptions eopt;
  eopt.delta_ladder = opt.eff_ladder;
  eopt.tol = opt.tol_eff;
  EffectiveOperator op(data_eff, eopt);

  const std::vector<double> snap{opt.T / 2.0, opt.T};

  for (int t = 0; t < trials; ++t) {
    std::mt19937_64 rng(seed + 977 * t);
    const TrigPoly2 base = random_trig(rng, 0.4, 3);
    const bool constant_shift = (t % 3 == 2);
    const double shift = 0.1 + 0.4 * (t % 5) / 4.0;
    TrigPoly2 upper = constant_shift ? base.plus_constant(shift)
                                     : TrigPoly2([&] {
                                         TrigPoly2 bump = random_nonneg(rng, 0.5);
                                         std::vector<TrigTerm> terms = base.terms();
                                         for (const TrigTerm& bt : bump.terms())
                                           terms.push_back(bt);
                                         return terms;
                                       }());

    // (a) oscillatory parabolic
    {
      const GridFunction u0 = sample_trig(base, data.slow_grid);
      const GridFunction v0 = sample_trig(upper, data.slow_grid);
      ParabolicSolution su = solve_parabolic(db_osc, u0, opt.T, snap);
      ParabolicSolution sv = solve_parabolic(db_osc, v0, opt.T, snap);
      double gap0 = 0.0;
      for (std::size_t i = 0; i < u0.size(); ++i)
        gap0 = std::max(gap0, v0[i] - u0[i]);
      for (std::size_t s = 0; s < su.snapshots.size(); ++s) {
        rep.worst_parabolic = std::max(
            rep.worst_parabolic, worst_excess(su.snapshots[s], sv.snapshots[s]));
        double gap = 0.0;
        for (std::size_t i = 0; i < u0.size(); ++i)
          gap = std::max(gap, sv.snapshots[s][i] - su.snapshots[s][i]);
        rep.worst_expansiveness = std::max(rep.worst_expansiveness, gap - gap0);
      }
    }

    // (b) effective parabolic (shared cache, key-deterministic values)
    {
      const GridFunction u0 = sample_trig(base, data_eff.slow_grid);
      const GridFunction v0 = sample_trig(upper, data_eff.slow_grid);
      ParabolicSolution su = solve_effective_parabolic(op, u0, opt.T, snap);
      ParabolicSolution sv = solve_effective_parabolic(op, v0, opt.T, snap);
      for (std::size_t s = 0; s < su.snapshots.size(); ++s)
        rep.worst_effective = std::max(
            rep.worst_effective, worst_excess(su.snapshots[s], sv.snapshots[s]));
    }

    // (c) stationary with ordered sources, lockstep iteration
    {
      const TrigPoly2 extra = random_nonneg(rng, 0.6);
      DiscreteBellman db_g = db_osc;
      for (int a = 0; a < db_g.m; ++a)
        for (std::size_t i = 0; i < db_g.grid.size(); ++i)
          db_g.f[a][i] += extra.eval_x(db_g.grid.point(i));
      StationaryOptions sopt;
      sopt.tol = opt.stationary_tol;
      auto [rf, rg] =
          solve_stationary_pair(db_osc, db_g, opt.stationary_delta, sopt);
      rep.worst_stationary =
          std::max(rep.worst_stationary, worst_excess(rf.psi, rg.psi));
    }
  }

  rep.pass = rep.worst_parabolic <= rep.threshold &&
             rep.worst_effective <= rep.threshold &&
             rep.worst_stationary <= rep.threshold &&
             rep.worst_expansiveness <= rep.threshold;
  return rep;
}

}  // namespace levyhomog
