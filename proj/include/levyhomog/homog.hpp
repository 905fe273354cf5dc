#pragma once

#include "levyhomog/effective.hpp"

namespace levyhomog {

struct SampleSpec {
  int points_per_axis = 16;
  std::vector<double> time_fractions{0.25, 0.5, 1.0};
};

struct StudyOptions {
  SampleSpec samples;
  EffectiveOptions eff;
  int nodes_per_period = 16;  // oscillatory solves resolve eps with this many nodes
  int eff_grid_n = 0;         // 0: twice the slow grid
  double monotone_slack = 0.10;
};

struct ConvergenceStudy {
  std::vector<double> eps_list;
  std::vector<double> times;
  std::vector<std::vector<double>> errors;  // [eps][time]
  std::vector<int> eps_resolution;
  int eff_resolution = 0;
  bool has_verdict = false;
  bool verdict_monotone = false;  // per-time non-increasing within the slack
  double halving_ratio = 0.0;     // max-over-times err(last) / err(first)
  double tau_eff = 0.0;
  std::vector<double> tau_eps;
  CacheStats cache;
};

/// Solves the oscillatory family and the effective problem, then measures the
/// sup distance on a fixed sample lattice at the sample times.
ConvergenceStudy run_convergence_study(const ProblemData& data,
                                       const TrigPoly2& u0, double T,
                                       const std::vector<double>& eps_list,
                                       const StudyOptions& opt = {});

struct ComparisonReport {
  int trials = 0;
  double worst_parabolic = 0.0;      // max over trials of max(u - v)
  double worst_effective = 0.0;
  double worst_stationary = 0.0;
  double worst_expansiveness = 0.0;  // gap growth beyond the initial shift
  double threshold = 1e-8;
  bool pass = false;
};

struct ComparisonSuiteOptions {
  double T = 0.04;
  int eff_grid_n = 32;
  double tol_eff = 1e-9;
  std::vector<double> eff_ladder{0.25, 0.125, 0.0625, 0.03125, 0.015625};
  double stationary_delta = 0.5;
  double stationary_tol = 1e-9;
};

/// Randomized ordered pairs against both parabolic schemes and the stationary
/// solver; order preservation is demanded to the report threshold.
ComparisonReport discrete_comparison_suite(const ProblemData& data, int trials,
                                           std::uint64_t seed,
                                           const ComparisonSuiteOptions& opt = {});

/// Fixed sample lattice of the study.
std::vector<Point> sample_lattice(int dim, int points_per_axis);

}  // namespace levyhomog
