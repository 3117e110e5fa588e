#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "survcross/crossing.hpp"
#include "survcross/inference.hpp"
#include "survcross/weibull.hpp"

namespace survcross {

enum class VariedParam { failure, shape };

std::string_view to_string(VariedParam v);
VariedParam parse_varied_param(std::string_view name);

/// Treatment arm = (1 + rel_diff) * control for the varied parameter; the
/// other treatment parameter is solved so the curves cross at t_chi_target.
struct ScenarioSpec {
  VariedParam varied = VariedParam::failure;
  double rel_diff = 0.25;
  double t_chi_target = 365.0;
  WeibullParams control{3.43e-4, 1.08};

  void validate() const;
};

struct Scenario {
  ScenarioSpec spec;
  CurvePair pair;
};

Scenario build_scenario(const ScenarioSpec& spec);

/// The four two-arm designs with a fixed 365-day crossing: failure and shape
/// differences of 25% and 50% against the control (3.43e-4, 1.08).
std::vector<ScenarioSpec> default_scenarios();

struct TrialData {
  Dataset control;
  Dataset treatment;
};

/// n_per_arm draws per arm, administratively censored. Arms use seeds
/// derived from (seed, arm); larger n extends smaller n by prefix.
TrialData simulate_trial(const Scenario& scenario, std::size_t n_per_arm, double censor_time, std::uint64_t seed);

struct SweepConfig {
  std::vector<std::size_t> n_grid;
  std::size_t replications = 10;
  double censor_time = 730.0;
  std::vector<ScenarioSpec> scenarios;
  SamplerConfig sampler;
  PriorConfig priors;
  std::uint64_t base_seed = 20180507;
  PointEstimate point_estimate = PointEstimate::mean;
  std::size_t threads = 0;  // 0 = hardware concurrency

  /// n_grid {200, 300, ..., 1900}, 10 replications, the four default scenarios.
  static SweepConfig defaults();
  void validate() const;
};

struct SweepRow {
  std::size_t scenario_id;
  VariedParam varied;
  double rel_diff;
  std::size_t n;
  std::size_t rep;
  double lambda1_hat;
  double k1_hat;
  double err_lambda;
  double err_k;
  double err_tchi_lambda;  // only lambda1 estimated, everything else at truth
  double err_tchi_k;       // only k1 estimated
  double err_tchi_joint;   // both arms estimated
  bool converged;
};

/// Seed for the simulated data of one replication. It depends on the base
/// seed and the replication only, so every scenario and sample size in a
/// replication reuses the same uniforms (common random numbers).
std::uint64_t data_seed(std::uint64_t base_seed, std::size_t rep);

/// Sampler seed for one row and arm, derived from every row coordinate.
std::uint64_t fit_seed(std::uint64_t base_seed, std::size_t scenario, std::size_t n, std::size_t rep, int arm);

SweepRow run_sweep_row(const SweepConfig& cfg, std::size_t scenario_index, const Scenario& scenario, std::size_t n,
                       std::size_t rep);

/// One row per (scenario, n, rep), sorted in that order. Rows run in
/// parallel; the output does not depend on the thread count.
std::vector<SweepRow> run_sweep(const SweepConfig& cfg);

struct SweepSummaryRow {
  std::size_t scenario_id;
  VariedParam varied;
  double rel_diff;
  std::size_t n;
  double lambda1_hat;
  double k1_hat;
  double err_lambda;
  double err_k;
  double err_tchi_lambda;
  double err_tchi_k;
  double err_tchi_joint;
  std::size_t used;     // converged rows averaged
  std::size_t dropped;  // non-converged rows excluded
};

/// Per-(scenario, n) means over converged rows.
std::vector<SweepSummaryRow> summarize_sweep(const std::vector<SweepRow>& rows);

}  // namespace survcross
