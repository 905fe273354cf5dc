#pragma once

#include <string>

#include "levyhomog/homog.hpp"

// nlohmann::json is forward-declared through the vendored single header.
#include <json.hpp>

namespace levyhomog {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kModelingNote =
    "slow domain is the periodic unit torus; data are taken periodic in x as "
    "well as in the fast variable";

/// Problem + solver + experiment blocks parsed from the JSON config.
struct ExperimentConfig {
  nlohmann::json raw;

  ProblemData problem;
  TrigPoly2 u0;

  // solver block
  double delta = 1.0;
  std::vector<double> delta_ladder{0.5,    0.25,     0.125,     0.0625,
                                   0.03125, 0.015625, 0.0078125, 0.00390625};
  double tol = 1e-7;
  long max_iters = 200000;
  double tau = 0.0;
  double rho = 0.5;
  double sigma = 0.5;
  double p_quantum = 1e-3;
  double ell_quantum = 1e-7;

  // experiment block
  double T = 0.25;
  std::vector<double> eps_list{0.25, 0.125, 0.0625};
  double eps = 1.0;
  std::vector<double> p_list{-2.0, -1.0, 0.0, 1.0, 2.0};
  Point x0{0.0, 0.0};
  Point p0{0.0, 0.0};
  std::vector<double> snapshot_fractions{0.25, 0.5, 1.0};
  int trials = 10;
  int nodes_per_period = 16;
  int eff_grid_n = 0;
  double cone_eta = 0.5;
  std::vector<double> cone_rho_list;  // empty: {h, 1/8, 1/4, 1/2, 1}
  std::vector<std::array<double, 2>> holder_pairs;
  double rho_check = 0.25;

  std::string output_dir = "out";
  std::uint64_t seed = 1234;
  int threads = 0;

  EffectiveOptions effective_options() const;
  StudyOptions study_options() const;
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const nlohmann::json& j);

/// Command names that require the cell theory (gamma > 1/2).
bool command_needs_cell(const std::string& command);
void validate_for_command(const ExperimentConfig& cfg, const std::string& command);

nlohmann::json assumption_to_json(const AssumptionReport& r);
nlohmann::json property_to_json(const PropertyCheck& p);

/// The full Prop-(1)..(4) battery plus the growth estimate; returns the JSON
/// report and sets all_pass.
nlohmann::json run_property_suite(const ExperimentConfig& cfg, bool& all_pass);

/// Kernel assumption battery for check-kernel.
nlohmann::json run_kernel_checks(const ExperimentConfig& cfg, bool& all_pass);

nlohmann::json study_to_json(const ConvergenceStudy& st);
void write_errors_csv(const ConvergenceStudy& st, const std::string& path);

/// Snapshot CSVs named <prefix>_t<index>.csv plus a manifest fragment.
nlohmann::json export_parabolic(const ParabolicSolution& sol,
                                const std::string& out_dir,
                                const std::string& prefix);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace levyhomog
