#include "levyhomog/config.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "levyhomog/errors.hpp"

namespace levyhomog {

using nlohmann::json;

static std::array<int, 2> parse_freq(const json& j) {
  if (j.is_number_integer()) return {j.get<int>(), 0};
  if (j.is_array()) {
    std::array<int, 2> k{0, 0};
    for (std::size_t i = 0; i < std::min<std::size_t>(2, j.size()); ++i)
      k[i] = j[i].get<int>();
    return k;
  }
  throw ValidationError("config: frequency must be an integer or a pair");
}

static TrigPoly2 parse_trig(const json& j) {
  if (j.is_null()) return TrigPoly2{};
  if (j.is_number()) return TrigPoly2::constant(j.get<double>());
  std::vector<TrigTerm> terms;
  for (const json& t : j) {
    TrigTerm term;
    term.amp = t.at("amp").get<double>();
    if (t.contains("kx")) term.kx = parse_freq(t["kx"]);
    if (t.contains("kxi")) term.kxi = parse_freq(t["kxi"]);
    if (t.contains("phase")) term.phase = t["phase"].get<double>();
    terms.push_back(term);
  }
  return TrigPoly2(std::move(terms));
}

static ZProfile parse_zprofile(const json& j) {
  ZProfile zp;
  if (j.is_null()) return zp;
  const std::string type = j.value("type", "none");
  if (type == "none")
    zp.type = ZProfile::Type::None;
  else if (type == "linear_ball")
    zp.type = ZProfile::Type::LinearBall;
  else if (type == "abs")
    zp.type = ZProfile::Type::Abs;
  else if (type == "even_ball")
    zp.type = ZProfile::Type::EvenBall;
  else if (type == "log_singular")
    zp.type = ZProfile::Type::LogSingular;
  else
    throw ValidationError("config: unknown z-profile " + type);
  zp.c = j.value("c", 0.0);
  zp.axis = j.value("axis", 0);
  return zp;
}

static std::shared_ptr<LevyKernel> parse_kernel(const json& jk, int dim,
                                                const TorusGrid& fast_grid,
                                                int num_controls) {
  const KernelFamily family = family_from_name(jk.at("family").get<std::string>());
  const bool symmetric = jk.at("symmetric").get<bool>();
  const double C_K = jk.at("C_K").get<double>();
  const double gamma = jk.at("gamma").get<double>();
  const json params = jk.value("params", json::object());

  std::vector<KernelControlParams> controls(num_controls);
  const json spatial = params.value("spatial", json());
  const json matrix = params.value("matrix", json());
  const json angular = params.value("angular", json());
  for (int a = 0; a < num_controls; ++a) {
    KernelControlParams& cp = controls[a];
    if (!spatial.is_null()) {
      cp.spatial = parse_trig(spatial.is_array() && spatial.size() == std::size_t(num_controls) &&
                                      (spatial[0].is_array() || spatial[0].is_number())
                                  ? spatial[a]
                                  : spatial);
    } else {
      cp.spatial = TrigPoly2::constant(1.0);
    }
    if (!matrix.is_null()) {
      const json& ma = matrix.is_array() && matrix.size() == std::size_t(num_controls)
                           ? matrix[a]
                           : matrix;
      for (std::size_t e = 0; e < std::min<std::size_t>(3, ma.size()); ++e)
        cp.matrix[e] = parse_trig(ma[e]);
    } else if (family == KernelFamily::MatrixAnisotropic) {
      cp.matrix[0] = TrigPoly2::constant(1.0);
      cp.matrix[1] = TrigPoly2::constant(1.0);
    }
    if (!angular.is_null()) {
      const json& aa = angular.is_array() && angular.size() == std::size_t(num_controls) &&
                               angular[0].is_array()
                           ? angular[a]
                           : angular;
      for (const json& hj : aa) {
        AngularHarmonic hh;
        hh.j = hj.value("j", 1);
        hh.c = hj.value("c", 0.0);
        hh.phase = hj.value("phase", 0.0);
        cp.angular.push_back(hh);
      }
    }
  }
  return std::make_shared<LevyKernel>(family, dim, fast_grid, std::move(controls),
                                      symmetric, C_K, gamma,
                                      parse_zprofile(params.value("zprofile", json())),
                                      params.value("halfspace_axis", 0));
}

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig cfg;
  cfg.raw = j;
  const json jp = j.at("problem");
  ProblemData& pd = cfg.problem;
  pd.dim = jp.value("dim", 1);
  pd.slow_grid = TorusGrid(pd.dim, jp.value("slow_n", 64));
  pd.fast_grid = TorusGrid(pd.dim, jp.value("fast_n", 128));
  const json jc = jp.at("controls");
  if (!jc.is_array() || jc.empty())
    throw ValidationError("config: empty control list");
  for (const json& c : jc) {
    ControlSpec spec;
    spec.cost = parse_trig(c.value("cost", json()));
    const json dr = c.value("drift", json());
    if (dr.is_array() && !dr.empty() && dr[0].is_array()) {
      for (std::size_t ax = 0; ax < std::min<std::size_t>(2, dr.size()); ++ax)
        spec.drift[ax] = parse_trig(dr[ax]);
    } else if (!dr.is_null()) {
      spec.drift[0] = parse_trig(dr);
    }
    pd.controls.push_back(std::move(spec));
  }
  pd.kernel = parse_kernel(jp.at("kernel"), pd.dim, pd.fast_grid,
                           pd.num_controls());
  if (jp.contains("holder")) {
    const json& h = jp["holder"];
    pd.holder.alpha = h.value("alpha", 1.0);
    pd.holder.beta = h.value("beta", 1.0);
    pd.holder.C_f = h.value("C_f", 0.0);
    pd.holder.C_b = h.value("C_b", 0.0);
  }
  pd.validate();

  if (j.contains("solver")) {
    const json& s = j["solver"];
    cfg.delta = s.value("delta", cfg.delta);
    if (s.contains("delta_ladder"))
      cfg.delta_ladder = s["delta_ladder"].get<std::vector<double>>();
    cfg.tol = s.value("tol", cfg.tol);
    cfg.max_iters = s.value("max_iters", cfg.max_iters);
    cfg.tau = s.value("tau", cfg.tau);
    cfg.rho = s.value("rho", cfg.rho);
    cfg.sigma = s.value("sigma", cfg.sigma);
    cfg.p_quantum = s.value("p_quantum", cfg.p_quantum);
    cfg.ell_quantum = s.value("ell_quantum", cfg.ell_quantum);
  }
  if (j.contains("experiment")) {
    const json& e = j["experiment"];
    cfg.T = e.value("T", cfg.T);
    if (e.contains("eps_list"))
      cfg.eps_list = e["eps_list"].get<std::vector<double>>();
    cfg.eps = e.value("eps", cfg.eps);
    if (e.contains("p_list")) cfg.p_list = e["p_list"].get<std::vector<double>>();
    if (e.contains("u0")) cfg.u0 = parse_trig(e["u0"]);
    if (e.contains("x")) cfg.x0[0] = e["x"].get<double>();
    if (e.contains("p")) {
      if (e["p"].is_array()) {
        for (std::size_t ax = 0; ax < std::min<std::size_t>(2, e["p"].size()); ++ax)
          cfg.p0[ax] = e["p"][ax].get<double>();
      } else {
        cfg.p0[0] = e["p"].get<double>();
      }
    }
    if (e.contains("snapshot_fractions"))
      cfg.snapshot_fractions = e["snapshot_fractions"].get<std::vector<double>>();
    cfg.trials = e.value("trials", cfg.trials);
    cfg.nodes_per_period = e.value("nodes_per_period", cfg.nodes_per_period);
    cfg.eff_grid_n = e.value("eff_grid_n", cfg.eff_grid_n);
    cfg.cone_eta = e.value("cone_eta", cfg.cone_eta);
    if (e.contains("cone_rho_list"))
      cfg.cone_rho_list = e["cone_rho_list"].get<std::vector<double>>();
    if (e.contains("holder_pairs"))
      for (const json& pr : e["holder_pairs"])
        cfg.holder_pairs.push_back({pr[0].get<double>(), pr[1].get<double>()});
    cfg.rho_check = e.value("rho_check", cfg.rho_check);
  }
  if (cfg.u0.empty())
    cfg.u0 = TrigPoly2({TrigTerm{0.5, {1, 0}, {0, 0}, -0.25}});  // 0.5 sin(2 pi x)
  cfg.output_dir = j.value("output_dir", cfg.output_dir);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.threads = j.value("threads", cfg.threads);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config parse error: ") + e.what());
  }
  return parse_config(j);
}

bool command_needs_cell(const std::string& command) {
  return command == "solve-cell" || command == "tabulate-heff" ||
         command == "solve-eff" || command == "converge" ||
         command == "properties";
}

void validate_for_command(const ExperimentConfig& cfg, const std::string& command) {
  const double gamma = cfg.problem.kernel->gamma();
  if (command_needs_cell(command) && !(gamma > 0.5))
    throw ValidationError(
        "config: the cell theory requires gamma in (1/2,1]; got gamma = " +
        std::to_string(gamma));
  for (double eps : cfg.eps_list) {
    const double kd = 1.0 / eps;
    const long k = std::lround(kd);
    if (std::abs(kd - double(k)) > 1e-9 || cfg.problem.slow_grid.n % k != 0)
      throw ValidationError(
          "config: eps values must be reciprocals of divisors of the slow grid");
  }
  if (cfg.delta_ladder.size() >= 2) {
    const std::size_t K = cfg.delta_ladder.size();
    if (std::abs(cfg.delta_ladder[K - 2] / cfg.delta_ladder[K - 1] - 2.0) > 1e-9)
      throw ValidationError("config: the delta ladder must end with a ratio-2 step");
  }
}

EffectiveOptions ExperimentConfig::effective_options() const {
  EffectiveOptions e;
  e.delta_ladder = delta_ladder;
  e.tol = tol;
  e.max_iters = max_iters;
  e.rho = rho;
  e.sigma = sigma;
  e.p_quantum = p_quantum;
  e.ell_quantum = ell_quantum;
  return e;
}

StudyOptions ExperimentConfig::study_options() const {
  StudyOptions s;
  s.eff = effective_options();
  s.samples.time_fractions = snapshot_fractions;
  s.nodes_per_period = nodes_per_period;
  s.eff_grid_n = eff_grid_n;
  return s;
}

// ---------------------------------------------------------------- reports

static std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json assumption_to_json(const AssumptionReport& r) {
  return json{{"assumption", r.assumption}, {"measured", r.measured},
              {"declared", r.declared},     {"pass", r.pass},
              {"lower_bound", r.lower_bound}, {"tol", r.tol},
              {"sample_note", r.sample_note}, {"details", r.details}};
}

json property_to_json(const PropertyCheck& p) {
  return json{{"name", p.name},       {"pass", p.pass},
              {"worst", p.worst},     {"threshold", p.threshold},
              {"details", p.details}, {"note", p.note}};
}

json run_kernel_checks(const ExperimentConfig& cfg, bool& all_pass) {
  const LevyKernel& k = *cfg.problem.kernel;
  json out = json::array();
  all_pass = true;
  auto push = [&](const AssumptionReport& r) {
    out.push_back(assumption_to_json(r));
    all_pass = all_pass && r.pass;
  };
  push(check_levy_bound(k));
  std::vector<double> rhos = cfg.cone_rho_list;
  if (rhos.empty())
    rhos = {cfg.problem.fast_grid.h(), 0.125, 0.25, 0.5, 1.0};
  for (double rho : rhos) {
    AssumptionReport r = check_cone_ellipticity(k, Point{1.0, 0.0}, cfg.cone_eta, rho);
    r.sample_note += "; rho=" + fmt_double(rho);
    push(r);
  }
  std::vector<std::array<double, 2>> pairs = cfg.holder_pairs;
  if (pairs.empty()) pairs = {{0.0, 0.25}, {0.1, 0.35}, {0.0, 0.05}};
  for (const auto& pr : pairs) {
    AssumptionReport r = check_holder_in_xi(k, Point{pr[0], 0.0},
                                            Point{pr[1], 0.0}, cfg.rho_check);
    r.sample_note += "; xi pair (" + fmt_double(pr[0]) + "," + fmt_double(pr[1]) + ")";
    push(r);
  }
  if (!k.symmetric()) push(check_modulus_integrability(k));
  if (k.kns_form()) {
    DriftCorrection bk = drift_correction(k, 0, Point{0.0, 0.0});
    out.push_back(json{{"assumption", "b_K sample"},
                       {"value", {bk.value[0], bk.value[1]}},
                       {"error_bound", bk.error_bound},
                       {"pass", true}});
  }
  return out;
}

json run_property_suite(const ExperimentConfig& cfg, bool& all_pass) {
  const ProblemData& data = cfg.problem;
  EffectiveOperator op(data, cfg.effective_options());
  const TorusGrid& g = data.slow_grid;
  const double tol2 = 2.0 * std::max(cfg.tol * 10.0, 1e-6);

  std::vector<double> base(g.size());
  for (std::size_t i = 0; i < g.size(); ++i)
    base[i] = cfg.u0.eval_x(g.point(i));
  const GridFunction u1(g, base);

  // contact point on the grid
  const Point x = g.point(g.wrap(int(std::round(cfg.x0[0] * g.n))), 0);

  json out = json::object();
  all_pass = true;
  auto push = [&](const char* key, const PropertyCheck& pc) {
    out[key] = property_to_json(pc);
    all_pass = all_pass && pc.pass;
  };

  {  // (1) global comparison with sin^4 bumps vanishing at x
    std::vector<std::pair<GridFunction, GridFunction>> pairs;
    for (int i = 0; i < 10; ++i) {
      const double height = 0.05 + 0.02 * i;
      std::vector<double> v2 = u1.values();
      for (std::size_t n = 0; n < v2.size(); ++n) {
        const Point y = g.point(n);
        double bump = std::pow(std::sin(M_PI * (y[0] - x[0])), 4);
        if (data.dim == 2)
          bump *= std::pow(std::sin(M_PI * (y[1] - x[1])), 4);
        v2[n] += height * bump;
      }
      pairs.emplace_back(u1, GridFunction(g, std::move(v2)));
    }
    push("global_comparison", check_global_comparison(op, x, cfg.p0, pairs, tol2));
  }
  {  // (2) convexity over 5 random pairs x 3 interpolation weights
    PropertyCheck agg;
    agg.name = "convexity_in_u";
    agg.threshold = tol2;
    agg.pass = true;
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int rep = 0; rep < 5; ++rep) {
      std::vector<double> a(g.size()), b(g.size());
      const double p1 = unif(rng), p2 = unif(rng), a1 = unif(rng) - 0.5,
                   a2 = unif(rng) - 0.5;
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double xv = g.point(i)[0];
        a[i] = a1 * std::cos(2 * M_PI * (xv + p1));
        b[i] = a2 * std::cos(4 * M_PI * (xv + p2));
      }
      PropertyCheck pc = check_convexity_in_u(op, x, cfg.p0, GridFunction(g, a),
                                              GridFunction(g, b),
                                              {0.25, 0.5, 0.75}, tol2);
      agg.worst = std::max(agg.worst, pc.worst);
      for (double d : pc.details) agg.details.push_back(d);
      agg.pass = agg.pass && pc.pass;
    }
    push("convexity_in_u", agg);
  }
  push("lipschitz_in_p", check_lipschitz_in_p(op, x, u1, cfg.p_list));
  push("holder_in_x", check_holder_in_x(op, cfg.p0, cfg.u0, cfg.sigma,
                                        {0.25, 0.125, 0.0625}, cfg.seed + 1));
  push("growth_bound", growth_bound_suite(op, cfg.seed + 2, 4, 6));
  return out;
}

json study_to_json(const ConvergenceStudy& st) {
  json errs = json::array();
  for (std::size_t e = 0; e < st.eps_list.size(); ++e)
    for (std::size_t t = 0; t < st.times.size(); ++t)
      errs.push_back(json{{"eps", st.eps_list[e]},
                          {"time", st.times[t]},
                          {"sup_error", st.errors[e][t]}});
  return json{{"eps_list", st.eps_list},
              {"times", st.times},
              {"errors", errs},
              {"eps_resolution", st.eps_resolution},
              {"eff_resolution", st.eff_resolution},
              {"has_verdict", st.has_verdict},
              {"verdict_monotone", st.verdict_monotone},
              {"halving_ratio", st.halving_ratio},
              {"tau_eff", st.tau_eff},
              {"tau_eps", st.tau_eps},
              {"cache_hits", st.cache.hits},
              {"cache_misses", st.cache.misses}};
}

void write_errors_csv(const ConvergenceStudy& st, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open " + path);
  out << "epsilon,time,sup_error\n";
  for (std::size_t e = 0; e < st.eps_list.size(); ++e)
    for (std::size_t t = 0; t < st.times.size(); ++t)
      out << fmt_double(st.eps_list[e]) << ',' << fmt_double(st.times[t]) << ','
          << fmt_double(st.errors[e][t]) << '\n';
}

json export_parabolic(const ParabolicSolution& sol, const std::string& out_dir,
                      const std::string& prefix) {
  json files = json::array();
  for (std::size_t i = 0; i < sol.snapshots.size(); ++i) {
    const std::string name = prefix + "_t" + std::to_string(i) + ".csv";
    write_csv(sol.snapshots[i], out_dir + "/" + name);
    files.push_back(name);
  }
  return json{{"times", sol.times},
              {"tau", sol.tau},
              {"cfl_coefficient", sol.cfl_coefficient},
              {"sup_trace", sol.sup_trace},
              {"snapshots", files}};
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open " + path);
  out << content;
}

}  // namespace levyhomog
