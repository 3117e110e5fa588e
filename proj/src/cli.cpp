#include "survcross/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "survcross/crossing.hpp"
#include "survcross/errors.hpp"
#include "survcross/inference.hpp"
#include "survcross/io.hpp"
#include "survcross/simulation.hpp"

namespace survcross::cli {

namespace {

using nlohmann::ordered_json;

/// Validation failures detected after parsing (exit 1).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void emit(const std::string& path, const std::string& contents, std::ostream& out) {
  if (path.empty()) {
    out << contents;
  } else {
    io::write_file_atomic(path, contents);
  }
}

std::string sig4(double v) {
  std::ostringstream ss;
  ss << std::setprecision(4) << v;
  return ss.str();
}

/// min, min + step, ..., max. Values are cleaned to 12 significant digits
/// so decimal grids land on their intended points (0, 1, ...).
std::vector<double> step_grid(double lo, double hi, double step, const std::string& name) {
  if (!std::isfinite(lo) || !std::isfinite(hi)) throw UsageError(name + " bounds must be finite");
  if (hi < lo) throw UsageError(name + " maximum is below its minimum");
  if (lo == hi) return {lo};
  if (!(step > 0.0) || !std::isfinite(step)) throw UsageError(name + " step must be positive");
  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  if (count > 1'000'000) throw UsageError(name + " grid is too large");
  std::vector<double> grid;
  grid.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    double v = lo + static_cast<double>(i) * step;
    if (std::abs(v) < 1e-9 * step) v = 0.0;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    grid.push_back(std::strtod(buf, nullptr));
  }
  return grid;
}

std::string format_or_throw(const std::string& format, std::initializer_list<const char*> allowed) {
  for (const char* a : allowed) {
    if (format == a) return format;
  }
  throw UsageError("unsupported --format '" + format + "'");
}

// ---------------------------------------------------------------------------

struct PairOptions {
  double l0 = 0, k0 = 0, l1 = 0, k1 = 0;

  void add_to(CLI::App* app) {
    app->add_option("--l0", l0, "control failure rate (1/day)")->required();
    app->add_option("--k0", k0, "control shape")->required();
    app->add_option("--l1", l1, "treatment failure rate (1/day)")->required();
    app->add_option("--k1", k1, "treatment shape")->required();
  }
  CurvePair pair() const { return {{l0, k0}, {l1, k1}}; }
};

std::string crossing_description(const CrossingResult& res) {
  switch (res.kind) {
    case CrossingKind::unique: return "curves cross at day " + sig4(*res.t_chi);
    case CrossingKind::none_equal_shapes: return "no crossing (equal shapes)";
    case CrossingKind::identical_curves: return "no crossing (identical curves)";
  }
  return {};
}

int run_cross(const PairOptions& p, const std::vector<double>& window, const std::string& format,
              const std::string& out_path, std::ostream& out) {
  const std::string fmt = format_or_throw(format.empty() ? "json" : format, {"json", "csv"});
  if (!window.empty() && (window.size() != 2 || !(window[0] <= window[1]))) {
    throw UsageError("--window takes two ordered values");
  }
  const CrossingResult res = crossing_point(p.pair());
  std::optional<bool> inside;
  if (!window.empty()) inside = res.within(window[0], window[1]);

  std::ostringstream doc;
  if (fmt == "json") {
    ordered_json j;
    j["kind"] = std::string(to_string(res.kind));
    j["t_chi"] = res.t_chi ? ordered_json(*res.t_chi) : ordered_json(nullptr);
    j["description"] = crossing_description(res);
    if (inside) {
      j["window"] = window;
      j["within_window"] = *inside;
    }
    j["parameters"] = {{"l0", p.l0}, {"k0", p.k0}, {"l1", p.l1}, {"k1", p.k1}};
    doc << j.dump(2) << '\n';
  } else {
    doc << "kind,t_chi,within_window,description\n"
        << to_string(res.kind) << ',' << (res.t_chi ? io::format_double(*res.t_chi) : "") << ','
        << (inside ? (*inside ? "1" : "0") : "") << ',' << crossing_description(res) << '\n';
  }
  emit(out_path, doc.str(), out);
  return kSuccess;
}

// ---------------------------------------------------------------------------

struct SensitivityOptions {
  PairOptions pair;
  std::string target = "lambda1";
  double phi_min = -0.1, phi_max = 0.1, phi_step = 0.01;
  std::string sweep;
  double sweep_min = 0.5, sweep_max = 1.5, sweep_step = 0.1;
  std::string k_law = "z";
};

int run_sensitivity(const SensitivityOptions& o, const std::string& format, const std::string& out_path,
                    std::ostream& out) {
  const std::string fmt = format_or_throw(format.empty() ? "csv" : format, {"csv", "json"});
  SensitivityRequest req;
  req.target = parse_param_target(o.target);
  req.phi_grid = step_grid(o.phi_min, o.phi_max, o.phi_step, "phi");
  if (o.k_law == "z") {
    req.k_law = KLaw::z_form;
  } else if (o.k_law == "gamma") {
    req.k_law = KLaw::gamma_form;
  } else {
    throw UsageError("--k-law must be 'z' or 'gamma'");
  }
  if (!o.sweep.empty()) {
    if (o.sweep == "gamma") {
      req.sweep = SweepKind::gamma;
    } else if (o.sweep == "z") {
      req.sweep = SweepKind::z;
    } else {
      throw UsageError("--sweep must be 'gamma' or 'z'");
    }
    req.sweep_values = step_grid(o.sweep_min, o.sweep_max, o.sweep_step, "sweep");
  }
  const auto rows = sensitivity_grid(o.pair.pair(), req);
  const bool any_defined =
      std::any_of(rows.begin(), rows.end(), [](const SensitivityRow& r) { return r.exact_ratio || r.law_ratio; });
  if (!any_defined) throw UsageError("no grid point satisfies the crossing or law preconditions");

  std::ostringstream doc;
  if (fmt == "csv") {
    io::write_sensitivity_csv(doc, rows);
  } else {
    ordered_json j = ordered_json::array();
    auto value = [](const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); };
    for (const auto& r : rows) {
      j.push_back({{"abscissa", r.abscissa},
                   {"abscissa_kind", std::string(to_string(r.abscissa_kind))},
                   {"phi", r.phi},
                   {"target", std::string(to_string(r.target))},
                   {"exact_ratio", value(r.exact_ratio)},
                   {"law_ratio", value(r.law_ratio)},
                   {"exact_rel_err", value(r.exact_rel_err())},
                   {"law_rel_err", value(r.law_rel_err())}});
    }
    doc << j.dump(2) << '\n';
  }
  emit(out_path, doc.str(), out);
  return kSuccess;
}

// ---------------------------------------------------------------------------

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError("invalid JSON in '" + path + "': " + e.what());
  }
}

struct FitOptions {
  std::string data_path;
  int arm = 0;
  std::string config_path;
  std::string chain_out;
  std::uint64_t seed = 1;
  std::size_t burn_in = 0, samples = 0, chains = 0, thin = 0;
  double initial_step = 0, target_accept = 0;
  double k_shape = 0, k_rate = 0, lambda_shape = 0, lambda_rate = 0;
};

int run_fit(const FitOptions& o, const CLI::App& sub, const std::string& format, const std::string& out_path,
            std::ostream& out, std::ostream& err) {
  format_or_throw(format.empty() ? "json" : format, {"json"});
  if (o.arm != 0 && o.arm != 1) throw UsageError("--arm must be 0 or 1");

  SamplerConfig sampler;
  PriorConfig priors;
  if (!o.config_path.empty()) {
    const auto j = read_json_file(o.config_path);
    if (!j.is_object()) throw UsageError("fit config must be a JSON object");
    for (const auto& [key, _] : j.items()) {
      if (key != "sampler" && key != "priors") throw UsageError("unknown key '" + key + "' in fit config");
    }
    if (j.contains("sampler")) sampler = io::sampler_from_json(j["sampler"], sampler);
    if (j.contains("priors")) priors = io::priors_from_json(j["priors"], priors);
  }
  auto given = [&](const char* name) { return sub.get_option(name)->count() > 0; };
  if (given("--seed")) sampler.seed = o.seed;
  if (given("--burn-in")) sampler.burn_in = o.burn_in;
  if (given("--samples")) sampler.samples = o.samples;
  if (given("--chains")) sampler.chains = o.chains;
  if (given("--thin")) sampler.thin = o.thin;
  if (given("--initial-step")) sampler.initial_step = o.initial_step;
  if (given("--target-accept")) sampler.target_accept = o.target_accept;
  if (given("--k-shape") || given("--k-rate")) {
    priors.k_prior = GammaPrior(given("--k-shape") ? o.k_shape : priors.k_prior.shape,
                                given("--k-rate") ? o.k_rate : priors.k_prior.rate);
  }
  if (given("--lambda-shape") || given("--lambda-rate")) {
    priors.lambda_prior = GammaPrior(given("--lambda-shape") ? o.lambda_shape : priors.lambda_prior.shape,
                                     given("--lambda-rate") ? o.lambda_rate : priors.lambda_prior.rate);
  }
  sampler.validate();

  std::ifstream in(o.data_path);
  if (!in) throw UsageError("cannot read dataset '" + o.data_path + "'");
  const TrialData trial = io::read_dataset_csv(in);
  const Dataset& data = o.arm == 0 ? trial.control : trial.treatment;
  if (data.empty()) throw UsageError("arm " + std::to_string(o.arm) + " has no records");

  const PosteriorChain chain = mh_sample(data, priors, sampler);
  const FitResult fit = summarize(chain);

  ordered_json j = io::fit_to_json(fit, chain);
  j["converged"] = chain.converged();
  j["n"] = data.size();
  j["events"] = data.events();
  j["settings"] = {{"data", o.data_path}, {"arm", o.arm}, {"sampler", io::to_json(sampler)},
                   {"priors", io::to_json(priors)}};

  std::string chain_csv;
  if (!o.chain_out.empty()) {
    std::ostringstream ss;
    io::write_chain_csv(ss, chain);
    chain_csv = ss.str();
  }
  emit(out_path, j.dump(2) + "\n", out);
  if (!o.chain_out.empty()) io::write_file_atomic(o.chain_out, chain_csv);

  if (!chain.converged()) {
    err << "warning: rhat above 1.1 (lambda " << sig4(chain.rhat_lambda) << ", k " << sig4(chain.rhat_k) << ")\n";
    return kRuntimeFailure;
  }
  return kSuccess;
}

// ---------------------------------------------------------------------------

struct SimulateOptions {
  std::string varied = "failure";
  double rel_diff = 0.25;
  double t_chi = 365.0;
  double l0 = 3.43e-4, k0 = 1.08;
  std::size_t n = 0;
  double censor = 730.0;
  std::uint64_t seed = 1;
};

int run_simulate(const SimulateOptions& o, const std::string& format, const std::string& out_path,
                 std::ostream& out, std::ostream& err) {
  format_or_throw(format.empty() ? "csv" : format, {"csv"});
  if (o.n == 0) throw UsageError("--n must be at least 1");
  ScenarioSpec spec;
  spec.varied = parse_varied_param(o.varied);
  spec.rel_diff = o.rel_diff;
  spec.t_chi_target = o.t_chi;
  spec.control = WeibullParams(o.l0, o.k0);
  const Scenario scenario = build_scenario(spec);
  const TrialData data = simulate_trial(scenario, o.n, o.censor, o.seed);

  std::ostringstream csv;
  io::write_dataset_csv(csv, data);
  emit(out_path, csv.str(), out);

  std::ostream& info = out_path.empty() ? err : out;
  const auto& t = scenario.pair.treatment;
  info << "treatment lambda1 = " << io::format_double(t.lambda()) << ", k1 = " << io::format_double(t.k())
       << "; t_chi = " << io::format_double(*crossing_point(scenario.pair).t_chi) << " days\n";
  info << "events: control " << data.control.events() << "/" << data.control.size() << ", treatment "
       << data.treatment.events() << "/" << data.treatment.size() << "\n";
  return kSuccess;
}

// ---------------------------------------------------------------------------

struct SweepOptions {
  std::string config_path;
  std::string summary_out;
  std::uint64_t seed = 0;
  std::size_t replications = 0;
  std::size_t threads = 0;
};

std::string default_summary_path(const std::string& out_path) {
  const auto dot = out_path.rfind('.');
  const auto slash = out_path.find_last_of('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return out_path + "_summary.csv";
  return out_path.substr(0, dot) + "_summary" + out_path.substr(dot);
}

int run_sweep_verb(const SweepOptions& o, const CLI::App& sub, const std::string& format,
                   const std::string& out_path, std::ostream& out, std::ostream& err) {
  format_or_throw(format.empty() ? "csv" : format, {"csv"});
  if (out_path.empty()) throw UsageError("sweep requires --out for the row-level CSV");
  SweepConfig cfg = io::sweep_config_from_json(read_json_file(o.config_path));
  if (sub.get_option("--seed")->count() > 0) cfg.base_seed = o.seed;
  if (sub.get_option("--replications")->count() > 0) cfg.replications = o.replications;
  if (sub.get_option("--threads")->count() > 0) cfg.threads = o.threads;
  cfg.validate();
  const std::string summary_path = o.summary_out.empty() ? default_summary_path(out_path) : o.summary_out;

  const auto rows = run_sweep(cfg);
  const auto summary = summarize_sweep(rows);

  std::ostringstream rows_csv, summary_csv;
  io::write_sweep_csv(rows_csv, rows);
  io::write_sweep_summary_csv(summary_csv, summary);
  io::write_file_atomic(out_path, rows_csv.str());
  io::write_file_atomic(summary_path, summary_csv.str());

  std::map<std::size_t, std::pair<const SweepSummaryRow*, const SweepSummaryRow*>> ends;
  for (const auto& s : summary) {
    auto& e = ends[s.scenario_id];
    if (!e.first || s.n < e.first->n) e.first = &s;
    if (!e.second || s.n > e.second->n) e.second = &s;
  }
  for (const auto& [id, e] : ends) {
    const auto& lo = *e.first;
    const auto& hi = *e.second;
    out << "scenario " << id << " (" << to_string(lo.varied) << " " << sig4(lo.rel_diff) << "), n " << lo.n << " -> "
        << hi.n << ": err_lambda " << sig4(lo.err_lambda) << " -> " << sig4(hi.err_lambda) << ", err_k "
        << sig4(lo.err_k) << " -> " << sig4(hi.err_k) << ", err_tchi_joint " << sig4(lo.err_tchi_joint) << " -> "
        << sig4(hi.err_tchi_joint)
        << ((hi.err_lambda < lo.err_lambda && hi.err_k < lo.err_k) ? "  [decreasing]" : "  [NOT decreasing]")
        << '\n';
  }
  out << "wrote " << rows.size() << " rows to " << out_path << " and " << summary.size() << " rows to "
      << summary_path << '\n';

  const auto dropped = std::count_if(rows.begin(), rows.end(), [](const SweepRow& r) { return !r.converged; });
  if (dropped > 0) {
    err << "warning: " << dropped << " replication(s) did not converge\n";
    return kRuntimeFailure;
  }
  return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Crossing points of Weibull survival curves: computation, sensitivity and simulation"};
  app.name("survcross");
  app.require_subcommand(1);

  std::string out_path, format;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", out_path, "output file (default: stdout)");
    sub->add_option("--format", format, "csv or json");
  };

  PairOptions cross_pair;
  std::vector<double> window;
  auto* cross = app.add_subcommand("cross", "crossing point of two Weibull survival curves");
  cross_pair.add_to(cross);
  cross->add_option("--window", window, "follow-up window: two values lo hi")->expected(2);
  add_common(cross);

  SensitivityOptions sens;
  auto* sensitivity = app.add_subcommand("sensitivity", "exact and scaling-law crossing errors on a grid");
  sens.pair.add_to(sensitivity);
  sensitivity->add_option("--target", sens.target, "lambda0, lambda1, k0 or k1");
  sensitivity->add_option("--phi-min", sens.phi_min);
  sensitivity->add_option("--phi-max", sens.phi_max);
  sensitivity->add_option("--phi-step", sens.phi_step);
  sensitivity->add_option("--sweep", sens.sweep, "sweep the shape ratio (gamma) or failure ratio (z)");
  sensitivity->add_option("--sweep-min", sens.sweep_min);
  sensitivity->add_option("--sweep-max", sens.sweep_max);
  sensitivity->add_option("--sweep-step", sens.sweep_step);
  sensitivity->add_option("--k-law", sens.k_law, "law for shape targets: z or gamma");
  add_common(sensitivity);

  FitOptions fit_opts;
  auto* fit = app.add_subcommand("fit", "posterior fit of one arm of a dataset");
  fit->add_option("--data", fit_opts.data_path, "dataset CSV (arm,time,event)")->required();
  fit->add_option("--arm", fit_opts.arm, "0 = control, 1 = treatment");
  fit->add_option("--config", fit_opts.config_path, "JSON with optional 'sampler' and 'priors' objects");
  fit->add_option("--chain-out", fit_opts.chain_out, "write posterior draws as CSV");
  fit->add_option("--seed", fit_opts.seed);
  fit->add_option("--burn-in", fit_opts.burn_in);
  fit->add_option("--samples", fit_opts.samples);
  fit->add_option("--chains", fit_opts.chains);
  fit->add_option("--thin", fit_opts.thin);
  fit->add_option("--initial-step", fit_opts.initial_step);
  fit->add_option("--target-accept", fit_opts.target_accept);
  fit->add_option("--k-shape", fit_opts.k_shape);
  fit->add_option("--k-rate", fit_opts.k_rate);
  fit->add_option("--lambda-shape", fit_opts.lambda_shape);
  fit->add_option("--lambda-rate", fit_opts.lambda_rate);
  add_common(fit);

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "simulate a two-arm trial with a fixed crossing");
  simulate->add_option("--varied", sim.varied, "failure or shape");
  simulate->add_option("--rel-diff", sim.rel_diff, "treatment = (1 + rel_diff) * control for the varied parameter");
  simulate->add_option("--t-chi", sim.t_chi, "crossing time in days");
  simulate->add_option("--l0", sim.l0);
  simulate->add_option("--k0", sim.k0);
  simulate->add_option("--n", sim.n, "subjects per arm")->required();
  simulate->add_option("--censor", sim.censor, "administrative censoring time in days");
  simulate->add_option("--seed", sim.seed);
  add_common(simulate);

  SweepOptions sweep_opts;
  auto* sweep = app.add_subcommand("sweep", "sample-size sweep over scenarios");
  sweep->add_option("--config", sweep_opts.config_path, "sweep configuration JSON")->required();
  sweep->add_option("--summary-out", sweep_opts.summary_out);
  sweep->add_option("--seed", sweep_opts.seed, "overrides base_seed");
  sweep->add_option("--replications", sweep_opts.replications);
  sweep->add_option("--threads", sweep_opts.threads);
  add_common(sweep);

  std::vector<const char*> argv{"survcross"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kValidationError;
  }

  try {
    if (*cross) return run_cross(cross_pair, window, format, out_path, out);
    if (*sensitivity) return run_sensitivity(sens, format, out_path, out);
    if (*fit) return run_fit(fit_opts, *fit, format, out_path, out, err);
    if (*simulate) return run_simulate(sim, format, out_path, out, err);
    if (*sweep) return run_sweep_verb(sweep_opts, *sweep, format, out_path, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kValidationError;
  } catch (const io::CsvError& e) {
    err << "error: " << e.what() << '\n';
    return kValidationError;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kValidationError;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << '\n';
    return kValidationError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  }
  return kValidationError;
}

}  // namespace survcross::cli
