#include "survcross/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string_view>
#include <system_error>

#include "survcross/errors.hpp"

namespace survcross::io {

using nlohmann::json;
using nlohmann::ordered_json;

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

namespace {

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

// NaN marks a value that could not be computed; written as an empty field.
std::string field(double v) { return std::isnan(v) ? std::string() : format_double(v); }

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, std::size_t line, const char* what) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw CsvError(line, std::string("cannot parse ") + what + " '" + s + "'");
  }
  return v;
}

int parse_flag(const std::string& s, std::size_t line, const char* what) {
  if (s == "0") return 0;
  if (s == "1") return 1;
  throw CsvError(line, std::string(what) + " must be 0 or 1, got '" + s + "'");
}

}  // namespace

CsvError::CsvError(std::size_t line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

void write_dataset_csv(std::ostream& out, const TrialData& data) {
  out << "arm,time,event\n";
  int arm = 0;
  for (const Dataset* d : {&data.control, &data.treatment}) {
    for (const auto& r : d->records()) out << arm << ',' << format_double(r.time) << ',' << (r.event ? 1 : 0) << '\n';
    ++arm;
  }
}

TrialData read_dataset_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  if (trim(line) != "arm,time,event") throw CsvError(line_no == 0 ? 1 : line_no, "expected header 'arm,time,event'");
  TrialData data;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(line);
    if (fields.size() != 3) throw CsvError(line_no, "expected 3 fields, got " + std::to_string(fields.size()));
    const int arm = parse_flag(fields[0], line_no, "arm");
    const double time = parse_double(fields[1], line_no, "time");
    const int event = parse_flag(fields[2], line_no, "event");
    if (!std::isfinite(time) || time < 0.0) throw CsvError(line_no, "time must be finite and non-negative");
    (arm == 0 ? data.control : data.treatment).push_back({time, event == 1});
  }
  return data;
}

void write_sensitivity_csv(std::ostream& out, const std::vector<SensitivityRow>& rows) {
  out << "abscissa,abscissa_kind,phi,target,exact_ratio,law_ratio,exact_rel_err,law_rel_err\n";
  for (const auto& r : rows) {
    out << format_double(r.abscissa) << ',' << to_string(r.abscissa_kind) << ',' << format_double(r.phi) << ','
        << to_string(r.target) << ',' << opt(r.exact_ratio) << ',' << opt(r.law_ratio) << ','
        << opt(r.exact_rel_err()) << ',' << opt(r.law_rel_err()) << '\n';
  }
}

void write_chain_csv(std::ostream& out, const PosteriorChain& chain) {
  out << "chain,iter,lambda,k\n";
  const std::size_t per = chain.per_chain();
  for (std::size_t i = 0; i < chain.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    out << i / per << ',' << i % per << ',' << format_double(chain.draws(r, 0)) << ','
        << format_double(chain.draws(r, 1)) << '\n';
  }
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "scenario_id,varied,rel_diff,n,rep,lambda1_hat,k1_hat,err_lambda,err_k,err_tchi_lambda,err_tchi_k,"
         "err_tchi_joint,converged\n";
  for (const auto& r : rows) {
    out << r.scenario_id << ',' << to_string(r.varied) << ',' << format_double(r.rel_diff) << ',' << r.n << ','
        << r.rep << ',' << field(r.lambda1_hat) << ',' << field(r.k1_hat) << ','
        << field(r.err_lambda) << ',' << field(r.err_k) << ',' << field(r.err_tchi_lambda)
        << ',' << field(r.err_tchi_k) << ',' << field(r.err_tchi_joint) << ','
        << (r.converged ? 1 : 0) << '\n';
  }
}

void write_sweep_summary_csv(std::ostream& out, const std::vector<SweepSummaryRow>& rows) {
  out << "scenario_id,varied,rel_diff,n,lambda1_hat,k1_hat,err_lambda,err_k,err_tchi_lambda,err_tchi_k,"
         "err_tchi_joint,converged,dropped\n";
  for (const auto& r : rows) {
    out << r.scenario_id << ',' << to_string(r.varied) << ',' << format_double(r.rel_diff) << ',' << r.n << ','
        << field(r.lambda1_hat) << ',' << field(r.k1_hat) << ',' << field(r.err_lambda)
        << ',' << field(r.err_k) << ',' << field(r.err_tchi_lambda) << ','
        << field(r.err_tchi_k) << ',' << field(r.err_tchi_joint) << ',' << r.used << ','
        << r.dropped << '\n';
  }
}

ordered_json fit_to_json(const FitResult& fit, const PosteriorChain& chain) {
  ordered_json j;
  j["mean_lambda"] = fit.mean_lambda;
  j["mean_k"] = fit.mean_k;
  j["sd_lambda"] = fit.sd_lambda;
  j["sd_k"] = fit.sd_k;
  j["ci_lambda"] = {fit.ci_lambda.lo, fit.ci_lambda.hi};
  j["ci_k"] = {fit.ci_k.lo, fit.ci_k.hi};
  j["median_lambda"] = fit.median_lambda;
  j["median_k"] = fit.median_k;
  j["rhat_lambda"] = chain.rhat_lambda;
  j["rhat_k"] = chain.rhat_k;
  j["accept_rate"] = chain.accept_rate;
  j["draws"] = chain.size();
  j["seed"] = chain.seed;
  return j;
}

ordered_json to_json(const SamplerConfig& cfg) {
  ordered_json j;
  j["burn_in"] = cfg.burn_in;
  j["samples"] = cfg.samples;
  j["chains"] = cfg.chains;
  j["thin"] = cfg.thin;
  j["initial_step"] = cfg.initial_step;
  j["target_accept"] = cfg.target_accept;
  j["seed"] = cfg.seed;
  if (cfg.fixed_k) j["fixed_k"] = *cfg.fixed_k;
  return j;
}

ordered_json to_json(const PriorConfig& priors) {
  ordered_json j;
  j["k"] = {{"shape", priors.k_prior.shape}, {"rate", priors.k_prior.rate}};
  j["lambda"] = {{"shape", priors.lambda_prior.shape}, {"rate", priors.lambda_prior.rate}};
  return j;
}

ordered_json to_json(const SweepConfig& cfg) {
  ordered_json j;
  j["n_grid"] = cfg.n_grid;
  j["replications"] = cfg.replications;
  j["censor_time"] = cfg.censor_time;
  j["scenarios"] = ordered_json::array();
  for (const auto& s : cfg.scenarios) {
    j["scenarios"].push_back({{"varied", std::string(to_string(s.varied))},
                              {"rel_diff", s.rel_diff},
                              {"t_chi_target", s.t_chi_target},
                              {"control", {{"lambda", s.control.lambda()}, {"k", s.control.k()}}}});
  }
  j["sampler"] = to_json(cfg.sampler);
  j["priors"] = to_json(cfg.priors);
  j["base_seed"] = cfg.base_seed;
  j["point_estimate"] = cfg.point_estimate == PointEstimate::mean ? "mean" : "median";
  j["threads"] = cfg.threads;
  return j;
}

namespace {

void reject_unknown(const json& j, std::initializer_list<std::string_view> known, const std::string& where) {
  if (!j.is_object()) throw InvalidArgument(where + " must be a JSON object");
  const std::set<std::string_view> allowed(known);
  for (const auto& [key, _] : j.items()) {
    if (!allowed.contains(key)) throw InvalidArgument("unknown key '" + key + "' in " + where);
  }
}

std::size_t count(const json& v, const std::string& key) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
    throw InvalidArgument(key + " must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

double number(const json& v, const std::string& key) {
  if (!v.is_number()) throw InvalidArgument(key + " must be a number");
  return v.get<double>();
}

}  // namespace

SamplerConfig sampler_from_json(const json& j, SamplerConfig cfg) {
  reject_unknown(j, {"burn_in", "samples", "chains", "thin", "initial_step", "target_accept", "seed", "fixed_k"},
                 "sampler");
  if (j.contains("burn_in")) cfg.burn_in = count(j["burn_in"], "burn_in");
  if (j.contains("samples")) cfg.samples = count(j["samples"], "samples");
  if (j.contains("chains")) cfg.chains = count(j["chains"], "chains");
  if (j.contains("thin")) cfg.thin = count(j["thin"], "thin");
  if (j.contains("initial_step")) cfg.initial_step = number(j["initial_step"], "initial_step");
  if (j.contains("target_accept")) cfg.target_accept = number(j["target_accept"], "target_accept");
  if (j.contains("seed")) cfg.seed = count(j["seed"], "seed");
  if (j.contains("fixed_k")) cfg.fixed_k = number(j["fixed_k"], "fixed_k");
  return cfg;
}

PriorConfig priors_from_json(const json& j, PriorConfig priors) {
  reject_unknown(j, {"k", "lambda"}, "priors");
  auto gamma = [](const json& g, GammaPrior base, const std::string& name) {
    reject_unknown(g, {"shape", "rate"}, "priors." + name);
    const double shape = g.contains("shape") ? number(g["shape"], name + ".shape") : base.shape;
    const double rate = g.contains("rate") ? number(g["rate"], name + ".rate") : base.rate;
    return GammaPrior(shape, rate);
  };
  if (j.contains("k")) priors.k_prior = gamma(j["k"], priors.k_prior, "k");
  if (j.contains("lambda")) priors.lambda_prior = gamma(j["lambda"], priors.lambda_prior, "lambda");
  return priors;
}

SweepConfig sweep_config_from_json(const json& j) {
  reject_unknown(j, {"n_grid", "replications", "censor_time", "scenarios", "sampler", "priors", "base_seed",
                     "point_estimate", "threads"},
                 "sweep config");
  SweepConfig cfg = SweepConfig::defaults();
  if (j.contains("n_grid")) {
    if (!j["n_grid"].is_array()) throw InvalidArgument("n_grid must be an array");
    cfg.n_grid.clear();
    for (const auto& v : j["n_grid"]) cfg.n_grid.push_back(count(v, "n_grid"));
  }
  if (j.contains("replications")) cfg.replications = count(j["replications"], "replications");
  if (j.contains("censor_time")) cfg.censor_time = number(j["censor_time"], "censor_time");
  if (j.contains("scenarios")) {
    if (!j["scenarios"].is_array()) throw InvalidArgument("scenarios must be an array");
    cfg.scenarios.clear();
    for (const auto& s : j["scenarios"]) {
      reject_unknown(s, {"varied", "rel_diff", "t_chi_target", "control"}, "scenario");
      ScenarioSpec spec;
      if (s.contains("varied")) {
        if (!s["varied"].is_string()) throw InvalidArgument("scenario.varied must be a string");
        spec.varied = parse_varied_param(s["varied"].get<std::string>());
      }
      if (s.contains("rel_diff")) spec.rel_diff = number(s["rel_diff"], "rel_diff");
      if (s.contains("t_chi_target")) spec.t_chi_target = number(s["t_chi_target"], "t_chi_target");
      if (s.contains("control")) {
        const auto& c = s["control"];
        reject_unknown(c, {"lambda", "k"}, "scenario.control");
        spec.control = WeibullParams(c.contains("lambda") ? number(c["lambda"], "lambda") : spec.control.lambda(),
                                     c.contains("k") ? number(c["k"], "k") : spec.control.k());
      }
      cfg.scenarios.push_back(spec);
    }
  }
  if (j.contains("sampler")) cfg.sampler = sampler_from_json(j["sampler"], cfg.sampler);
  if (j.contains("priors")) cfg.priors = priors_from_json(j["priors"], cfg.priors);
  if (j.contains("base_seed")) cfg.base_seed = count(j["base_seed"], "base_seed");
  if (j.contains("point_estimate")) {
    const auto& p = j["point_estimate"];
    if (p == "mean") {
      cfg.point_estimate = PointEstimate::mean;
    } else if (p == "median") {
      cfg.point_estimate = PointEstimate::median;
    } else {
      throw InvalidArgument("point_estimate must be 'mean' or 'median'");
    }
  }
  if (j.contains("threads")) cfg.threads = count(j["threads"], "threads");
  cfg.validate();
  return cfg;
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  const std::filesystem::path target(path);
  std::filesystem::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
    out << contents;
    if (!out.flush()) throw std::runtime_error("failed writing '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, target);
}

}  // namespace survcross::io
