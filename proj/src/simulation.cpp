#include "survcross/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <thread>

#include "survcross/errors.hpp"
#include "survcross/seed.hpp"

namespace survcross {

std::string_view to_string(VariedParam v) { return v == VariedParam::failure ? "failure" : "shape"; }

VariedParam parse_varied_param(std::string_view name) {
  if (name == "failure" || name == "lambda") return VariedParam::failure;
  if (name == "shape" || name == "k") return VariedParam::shape;
  throw InvalidArgument("varied parameter must be 'failure' or 'shape', got '" + std::string(name) + "'");
}

void ScenarioSpec::validate() const {
  if (!std::isfinite(rel_diff) || rel_diff == 0.0) {
    throw DegenerateInput("relative difference 0 gives equal curves that never cross");
  }
  if (!(1.0 + rel_diff > 0.0)) throw InvalidArgument("relative difference must exceed -1");
  if (!std::isfinite(t_chi_target) || t_chi_target <= 0.0) throw InvalidArgument("crossing time must be positive");
}

Scenario build_scenario(const ScenarioSpec& spec) {
  spec.validate();
  const double ratio = 1.0 + spec.rel_diff;
  CurvePair pair = spec.varied == VariedParam::failure
                       ? pair_with_failure_ratio(spec.control, ratio, spec.t_chi_target)
                       : pair_with_shape_ratio(spec.control, ratio, spec.t_chi_target);
  const auto res = crossing_point(pair);
  if (!res.is_unique() || std::abs(*res.t_chi / spec.t_chi_target - 1.0) > 1e-9) {
    throw DegenerateInput("solved treatment arm does not cross at the requested time");
  }
  return {spec, pair};
}

std::vector<ScenarioSpec> default_scenarios() {
  std::vector<ScenarioSpec> out;
  for (VariedParam v : {VariedParam::failure, VariedParam::shape}) {
    for (double d : {0.25, 0.50}) {
      ScenarioSpec s;
      s.varied = v;
      s.rel_diff = d;
      out.push_back(s);
    }
  }
  return out;
}

TrialData simulate_trial(const Scenario& scenario, std::size_t n_per_arm, double censor_time, std::uint64_t seed) {
  if (n_per_arm == 0) throw InvalidArgument("a trial needs at least one subject per arm");
  if (!std::isfinite(censor_time) || censor_time <= 0.0) throw InvalidArgument("censor time must be positive");
  const auto control = sample_times(scenario.pair.control, n_per_arm, derive_seed({seed, 0}));
  const auto treatment = sample_times(scenario.pair.treatment, n_per_arm, derive_seed({seed, 1}));
  return {apply_censoring(control, censor_time), apply_censoring(treatment, censor_time)};
}

SweepConfig SweepConfig::defaults() {
  SweepConfig cfg;
  for (std::size_t n = 200; n <= 1900; n += 100) cfg.n_grid.push_back(n);
  cfg.scenarios = default_scenarios();
  return cfg;
}

void SweepConfig::validate() const {
  if (n_grid.empty()) throw InvalidArgument("n_grid must not be empty");
  if (n_grid.front() == 0) throw InvalidArgument("n_grid values must be positive");
  if (!std::is_sorted(n_grid.begin(), n_grid.end()) ||
      std::adjacent_find(n_grid.begin(), n_grid.end()) != n_grid.end()) {
    throw InvalidArgument("n_grid must be strictly ascending");
  }
  if (replications == 0) throw InvalidArgument("replications must be at least 1");
  if (!std::isfinite(censor_time) || censor_time <= 0.0) throw InvalidArgument("censor_time must be positive");
  if (scenarios.empty()) throw InvalidArgument("at least one scenario is required");
  for (const auto& s : scenarios) build_scenario(s);
  sampler.validate();
}

std::uint64_t data_seed(std::uint64_t base_seed, std::size_t rep) { return derive_seed({base_seed, 0xda7a, rep}); }

std::uint64_t fit_seed(std::uint64_t base_seed, std::size_t scenario, std::size_t n, std::size_t rep, int arm) {
  return derive_seed({base_seed, scenario, n, rep, static_cast<std::uint64_t>(arm)});
}

SweepRow run_sweep_row(const SweepConfig& cfg, std::size_t scenario_index, const Scenario& scenario, std::size_t n,
                       std::size_t rep) {
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  SweepRow row{scenario_index, scenario.spec.varied, scenario.spec.rel_diff, n, rep, nan, nan, nan, nan, nan,
               nan, nan, false};
  const CurvePair& truth = scenario.pair;
  const double t_true = *crossing_point(truth).t_chi;
  auto crossing_error = [&](const CurvePair& p) {
    const auto res = crossing_point(p);
    return res.is_unique() ? std::abs(relative_error(*res.t_chi, t_true)) : nan;
  };

  try {
    const TrialData data = simulate_trial(scenario, n, cfg.censor_time, data_seed(cfg.base_seed, rep));
    SamplerConfig sampler = cfg.sampler;
    sampler.seed = fit_seed(cfg.base_seed, scenario_index, n, rep, 1);
    const PosteriorChain treatment_chain = mh_sample(data.treatment, cfg.priors, sampler);
    sampler.seed = fit_seed(cfg.base_seed, scenario_index, n, rep, 0);
    const PosteriorChain control_chain = mh_sample(data.control, cfg.priors, sampler);

    const WeibullParams t_hat = point_estimate(summarize(treatment_chain), cfg.point_estimate);
    const WeibullParams c_hat = point_estimate(summarize(control_chain), cfg.point_estimate);
    const auto& t1 = truth.treatment;

    row.lambda1_hat = t_hat.lambda();
    row.k1_hat = t_hat.k();
    row.err_lambda = std::abs(t_hat.lambda() - t1.lambda()) / t1.lambda();
    row.err_k = std::abs(t_hat.k() - t1.k()) / t1.k();
    row.err_tchi_lambda = crossing_error({truth.control, {t_hat.lambda(), t1.k()}});
    row.err_tchi_k = crossing_error({truth.control, {t1.lambda(), t_hat.k()}});
    row.err_tchi_joint = crossing_error({c_hat, t_hat});

    const bool finite = std::isfinite(row.err_lambda) && std::isfinite(row.err_k) &&
                        std::isfinite(row.err_tchi_lambda) && std::isfinite(row.err_tchi_k) &&
                        std::isfinite(row.err_tchi_joint);
    row.converged = finite && treatment_chain.converged() && control_chain.converged();
  } catch (const std::exception&) {
    row.converged = false;
  }
  return row;
}

std::vector<SweepRow> run_sweep(const SweepConfig& cfg) {
  cfg.validate();
  std::vector<Scenario> scenarios;
  for (const auto& s : cfg.scenarios) scenarios.push_back(build_scenario(s));

  struct Task {
    std::size_t scenario, n, rep;
  };
  std::vector<Task> tasks;
  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    for (std::size_t n : cfg.n_grid) {
      for (std::size_t r = 0; r < cfg.replications; ++r) tasks.push_back({s, n, r});
    }
  }

  std::vector<SweepRow> rows(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      const Task& t = tasks[i];
      rows[i] = run_sweep_row(cfg, t.scenario, scenarios[t.scenario], t.n, t.rep);
    }
  };
  std::size_t threads = cfg.threads != 0 ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, tasks.size());
  std::vector<std::jthread> pool;
  for (std::size_t i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  pool.clear();
  return rows;
}

std::vector<SweepSummaryRow> summarize_sweep(const std::vector<SweepRow>& rows) {
  if (rows.empty()) throw InvalidArgument("cannot summarize an empty sweep");
  std::map<std::pair<std::size_t, std::size_t>, SweepSummaryRow> groups;
  for (const auto& r : rows) {
    auto [it, inserted] = groups.try_emplace({r.scenario_id, r.n},
                                             SweepSummaryRow{r.scenario_id, r.varied, r.rel_diff, r.n, 0, 0, 0, 0,
                                                             0, 0, 0, 0, 0});
    SweepSummaryRow& g = it->second;
    if (!r.converged) {
      ++g.dropped;
      continue;
    }
    ++g.used;
    g.lambda1_hat += r.lambda1_hat;
    g.k1_hat += r.k1_hat;
    g.err_lambda += r.err_lambda;
    g.err_k += r.err_k;
    g.err_tchi_lambda += r.err_tchi_lambda;
    g.err_tchi_k += r.err_tchi_k;
    g.err_tchi_joint += r.err_tchi_joint;
  }
  std::vector<SweepSummaryRow> out;
  out.reserve(groups.size());
  for (auto& [key, g] : groups) {
    const double denom = g.used == 0 ? std::numeric_limits<double>::quiet_NaN() : static_cast<double>(g.used);
    for (double* f : {&g.lambda1_hat, &g.k1_hat, &g.err_lambda, &g.err_k, &g.err_tchi_lambda, &g.err_tchi_k,
                      &g.err_tchi_joint}) {
      *f /= denom;
    }
    out.push_back(g);
  }
  return out;
}

}  // namespace survcross
