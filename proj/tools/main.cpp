#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "levyhomog/config.hpp"
#include "levyhomog/errors.hpp"
#include "levyhomog/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace levyhomog;

namespace {

struct RunContext {
  std::string command;
  ExperimentConfig cfg;
  std::string out_dir;
  json outputs = json::array();
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

  void note_output(const std::string& name) { outputs.push_back(name); }

  void write_manifest() {
    const auto dt = std::chrono::steady_clock::now() - t0;
    json manifest{
        {"command", command},
        {"version", kVersion},
        {"wall_time_ms",
         std::chrono::duration_cast<std::chrono::milliseconds>(dt).count()},
        {"config", cfg.raw},
        {"outputs", outputs},
        {"notes", json::array({kModelingNote})}};
    write_text_file(out_dir + "/run_manifest.json", manifest.dump(2) + "\n");
  }
};

GridFunction initial_condition(const ExperimentConfig& cfg, const TorusGrid& g) {
  std::vector<double> v(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) v[i] = cfg.u0.eval_x(g.point(i));
  return GridFunction(g, std::move(v));
}

int cmd_check_kernel(RunContext& ctx) {
  bool pass = true;
  json rep = run_kernel_checks(ctx.cfg, pass);
  write_text_file(ctx.out_dir + "/assumptions.json",
                  json{{"checks", rep}, {"all_pass", pass}}.dump(2) + "\n");
  ctx.note_output("assumptions.json");
  return 0;
}

int cmd_solve_stationary(RunContext& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  StencilCache stencils(*cfg.problem.kernel, cfg.problem.slow_grid);
  DiscreteBellman db =
      assemble_oscillatory(cfg.problem, cfg.problem.slow_grid, cfg.eps, stencils);
  StationaryOptions opt;
  opt.tol = cfg.tol;
  opt.max_iters = cfg.max_iters;
  opt.tau_override = cfg.tau;
  StationaryResult r = solve_stationary_discounted(db, cfg.delta, opt);
  write_csv(r.psi, ctx.out_dir + "/psi.csv");
  ctx.note_output("psi.csv");
  json rep{{"delta", cfg.delta},       {"iters", r.iters},
           {"residual", r.residual},   {"tau", r.tau},
           {"cfl", r.cfl_coefficient}, {"converged", r.converged},
           {"lip", lipschitz_seminorm(r.psi)}};
  write_text_file(ctx.out_dir + "/solve.json", rep.dump(2) + "\n");
  ctx.note_output("solve.json");
  return r.converged ? 0 : 2;
}

int cmd_solve_cell(RunContext& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  CellWorkbench wb(cfg.problem);
  const GridFunction u = initial_condition(cfg, cfg.problem.slow_grid);
  CellProblem cp = build_cell_problem(wb, cfg.x0, cfg.p0, u, cfg.rho);
  CellSolveOptions copt;
  copt.tol = cfg.tol;
  copt.max_iters = cfg.max_iters;
  EffectiveEvaluation ev = solve_cell(wb, cp, cfg.delta_ladder, copt);
  write_csv(ev.corrector, ctx.out_dir + "/corrector.csv");
  ctx.note_output("corrector.csv");
  const CorrectorLipReport lip = corrector_lipschitz_report(ev, cp, cfg.sigma);
  json rep{{"lambda", ev.lambda},
           {"lambda_sequence", ev.lambda_seq},
           {"deltas", ev.deltas},
           {"residuals", ev.residuals},
           {"lambda_mean_diag", ev.lambda_mean_diag},
           {"lip_measured", ev.lip_measured},
           {"lip_bound_inputs",
            {{"c_rho", lip.c_rho},
             {"growth", lip.growth},
             {"implied_C", lip.implied_C},
             {"sigma", lip.sigma}}},
           {"converged", ev.converged},
           {"total_iters", ev.total_iters}};
  write_text_file(ctx.out_dir + "/cell.json", rep.dump(2) + "\n");
  ctx.note_output("cell.json");
  return ev.converged ? 0 : 2;
}

int cmd_tabulate_heff(RunContext& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  EffectiveOperator op(cfg.problem, cfg.effective_options());
  const TorusGrid& g = cfg.problem.slow_grid;
  const GridFunction u = initial_condition(cfg, g);
  const int stride = std::max(1, g.n / 16);
  std::ofstream out(ctx.out_dir + "/heff.csv", std::ios::binary);
  out << "x_index,p,lambda,cell_iters,lip_measured\n";
  char buf[128];
  for (int i = 0; i < g.n; i += stride) {
    for (double p : cfg.p_list) {
      EffectiveEvaluation ev;
      const double lambda = op.eval(g.point(i, 0), Point{p, 0.0}, u, &ev);
      std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%ld,%.17g\n", i, p, lambda,
                    ev.total_iters, ev.lip_measured);
      out << buf;
    }
  }
  out.close();
  ctx.note_output("heff.csv");
  const CacheStats st = op.cache_stats();
  write_text_file(ctx.out_dir + "/heff.json",
                  json{{"cache_hits", st.hits}, {"cache_misses", st.misses}}.dump(2) + "\n");
  ctx.note_output("heff.json");
  return 0;
}

int cmd_solve_eps(RunContext& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  StencilCache stencils(*cfg.problem.kernel, cfg.problem.slow_grid);
  DiscreteBellman db =
      assemble_oscillatory(cfg.problem, cfg.problem.slow_grid, cfg.eps, stencils);
  std::vector<double> times;
  for (double fr : cfg.snapshot_fractions) times.push_back(fr * cfg.T);
  ParabolicOptions popt;
  popt.tau = cfg.tau;
  ParabolicSolution sol =
      solve_parabolic(db, initial_condition(cfg, cfg.problem.slow_grid), cfg.T,
                      times, popt);
  json manifest = export_parabolic(sol, ctx.out_dir, "u_eps");
  manifest["eps"] = cfg.eps;
  write_text_file(ctx.out_dir + "/parabolic.json", manifest.dump(2) + "\n");
  for (const auto& f : manifest["snapshots"]) ctx.note_output(f.get<std::string>());
  ctx.note_output("parabolic.json");
  return 0;
}

int cmd_solve_eff(RunContext& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  EffectiveOperator op(cfg.problem, cfg.effective_options());
  std::vector<double> times;
  for (double fr : cfg.snapshot_fractions) times.push_back(fr * cfg.T);
  ParabolicOptions popt;
  popt.tau = cfg.tau;
  ParabolicSolution sol = solve_effective_parabolic(
      op, initial_condition(cfg, cfg.problem.slow_grid), cfg.T, times, popt);
  json manifest = export_parabolic(sol, ctx.out_dir, "u_eff");
  const CacheStats st = op.cache_stats();
  manifest["cache_hits"] = st.hits;
  manifest["cache_misses"] = st.misses;
  write_text_file(ctx.out_dir + "/parabolic.json", manifest.dump(2) + "\n");
  for (const auto& f : manifest["snapshots"]) ctx.note_output(f.get<std::string>());
  ctx.note_output("parabolic.json");
  return 0;
}

int cmd_converge(RunContext& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  ConvergenceStudy st = run_convergence_study(cfg.problem, cfg.u0, cfg.T,
                                              cfg.eps_list, cfg.study_options());
  write_errors_csv(st, ctx.out_dir + "/errors.csv");
  ctx.note_output("errors.csv");
  json rep = study_to_json(st);
  rep["config_seed"] = cfg.seed;
  write_text_file(ctx.out_dir + "/study.json", rep.dump(2) + "\n");
  ctx.note_output("study.json");
  return 0;
}

int cmd_properties(RunContext& ctx) {
  bool pass = true;
  json rep = run_property_suite(ctx.cfg, pass);
  rep["all_pass"] = pass;
  write_text_file(ctx.out_dir + "/properties.json", rep.dump(2) + "\n");
  ctx.note_output("properties.json");
  return pass ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonlocal HJB homogenization toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  int threads = 0;

  const std::vector<std::pair<std::string, int (*)(RunContext&)>> commands = {
      {"check-kernel", cmd_check_kernel},
      {"solve-stationary", cmd_solve_stationary},
      {"solve-cell", cmd_solve_cell},
      {"tabulate-heff", cmd_tabulate_heff},
      {"solve-eps", cmd_solve_eps},
      {"solve-eff", cmd_solve_eff},
      {"converge", cmd_converge},
      {"properties", cmd_properties}};

  for (const auto& [name, fn] : commands) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path)->required();
    sub->add_option("--out", out_dir);
    sub->add_option("--threads", threads);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << app.help() << std::endl;
    return app.exit(e, std::cerr, std::cerr) == 0 ? 0 : 1;
  }

  try {
    RunContext ctx;
    for (const auto& [name, fn] : commands) {
      if (app.get_subcommand(name)->parsed()) {
        ctx.command = name;
        ctx.cfg = load_config(config_path);
        validate_for_command(ctx.cfg, name);
        if (const char* env = std::getenv("LEVY_HOMOG_OUT")) out_dir = env;
        ctx.out_dir = out_dir;
        fs::create_directories(ctx.out_dir);
        if (threads > 0)
          set_worker_threads(threads);
        else if (ctx.cfg.threads > 0)
          set_worker_threads(ctx.cfg.threads);
        const int rc = fn(ctx);
        ctx.write_manifest();
        return rc;
      }
    }
    std::cerr << "no subcommand given\n" << app.help() << std::endl;
    return 1;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << std::endl;
    return 1;
  } catch (const QuadratureError& e) {
    std::cerr << "quadrature error: " << e.what() << " [" << e.diagnostic << "]"
              << std::endl;
    return 2;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << std::endl;
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  }
}
