#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "survcross/io.hpp"

using namespace survcross;
using nlohmann::json;

namespace {

TrialData read_string(const std::string& s) {
  std::istringstream in(s);
  return io::read_dataset_csv(in);
}

std::size_t error_line(const std::string& s) {
  try {
    read_string(s);
  } catch (const io::CsvError& e) {
    return e.line();
  }
  return 0;
}

}  // namespace

TEST_CASE("format_double round-trips", "[io]") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> exponent(-300.0, 300.0);
  for (int i = 0; i < 2000; ++i) {
    const double v = std::pow(10.0, exponent(rng)) * (i % 2 ? 1.0 : -1.0);
    CHECK(std::stod(io::format_double(v)) == v);
  }
  CHECK(io::format_double(0.25) == "0.25");
  CHECK(io::format_double(365.0) == "365");
}

TEST_CASE("dataset CSV round trip", "[io]") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> time(0.0, 2000.0);
  std::bernoulli_distribution event(0.3);
  for (int trial = 0; trial < 50; ++trial) {
    TrialData data;
    for (int i = 0; i < 40; ++i) {
      data.control.push_back({time(rng), event(rng)});
      data.treatment.push_back({time(rng), event(rng)});
    }
    std::ostringstream out;
    io::write_dataset_csv(out, data);
    const auto back = read_string(out.str());
    CHECK(std::ranges::equal(back.control.records(), data.control.records()));
    CHECK(std::ranges::equal(back.treatment.records(), data.treatment.records()));
  }
}

TEST_CASE("dataset CSV errors carry line numbers", "[io]") {
  CHECK(error_line("") == 1);
  CHECK(error_line("time,arm,event\n") == 1);
  CHECK(error_line("arm,time,event\n0,10,1\n0,abc,1\n") == 3);
  CHECK(error_line("arm,time,event\n0,10,1\n2,10,1\n") == 3);
  CHECK(error_line("arm,time,event\n0,10\n") == 2);
  CHECK(error_line("arm,time,event\n0,10,1,5\n") == 2);
  CHECK(error_line("arm,time,event\n0,-1,1\n") == 2);
  CHECK(error_line("arm,time,event\n1,10,yes\n") == 2);
  CHECK(error_line("arm,time,event\n\n1,10,1\n1,10,\n") == 4);

  try {
    read_string("arm,time,event\n0,x,1\n");
    FAIL("no exception");
  } catch (const io::CsvError& e) {
    CHECK_THAT(e.what(), Catch::Matchers::StartsWith("line 2:"));
  }

  const auto empty = read_string("arm,time,event\n");
  CHECK(empty.control.empty());
  CHECK(empty.treatment.empty());
  const auto crlf = read_string("arm,time,event\r\n1,5.5,1\r\n");
  CHECK(crlf.treatment.size() == 1);
}

TEST_CASE("sensitivity CSV writes missing values as empty fields", "[io]") {
  std::vector<SensitivityRow> rows{{0.9, SweepKind::gamma, 0.05, ParamTarget::k1, 1.5, std::nullopt},
                                   {1.0, SweepKind::gamma, 0.05, ParamTarget::k1, std::nullopt, std::nullopt}};
  std::ostringstream out;
  io::write_sensitivity_csv(out, rows);
  CHECK(out.str() ==
        "abscissa,abscissa_kind,phi,target,exact_ratio,law_ratio,exact_rel_err,law_rel_err\n"
        "0.9,gamma,0.05,k1,1.5,,0.5,\n"
        "1,gamma,0.05,k1,,,,\n");
}

TEST_CASE("chain CSV", "[io]") {
  PosteriorChain chain;
  chain.draws.resize(4, 2);
  chain.draws << 1, 2, 3, 4, 5, 6, 7, 8;
  chain.chains = 2;
  std::ostringstream out;
  io::write_chain_csv(out, chain);
  CHECK(out.str() == "chain,iter,lambda,k\n0,0,1,2\n0,1,3,4\n1,0,5,6\n1,1,7,8\n");
}

TEST_CASE("sweep CSV", "[io]") {
  SweepRow ok{1, VariedParam::shape, 0.5, 200, 3, 4e-4, 1.5, 0.1, 0.2, 0.3, 0.4, 0.5, true};
  SweepRow bad = ok;
  bad.converged = false;
  bad.err_tchi_joint = std::numeric_limits<double>::quiet_NaN();
  std::ostringstream out;
  io::write_sweep_csv(out, {ok, bad});
  CHECK(out.str() ==
        "scenario_id,varied,rel_diff,n,rep,lambda1_hat,k1_hat,err_lambda,err_k,err_tchi_lambda,err_tchi_k,"
        "err_tchi_joint,converged\n"
        "1,shape,0.5,200,3,4e-04,1.5,0.1,0.2,0.3,0.4,0.5,1\n"
        "1,shape,0.5,200,3,4e-04,1.5,0.1,0.2,0.3,0.4,,0\n");

  std::ostringstream summary;
  io::write_sweep_summary_csv(summary, summarize_sweep({ok, bad}));
  CHECK_THAT(summary.str(), Catch::Matchers::StartsWith("scenario_id,varied,rel_diff,n,lambda1_hat"));
  CHECK_THAT(summary.str(), Catch::Matchers::EndsWith(",1,1\n"));
}

TEST_CASE("sweep config JSON round trip", "[io][json]") {
  auto cfg = SweepConfig::defaults();
  cfg.sampler.seed = 5;
  cfg.sampler.fixed_k = 1.0;
  cfg.priors.k_prior = GammaPrior(2.0, 0.5);
  cfg.scenarios[1].control = WeibullParams(1e-3, 0.7);
  cfg.point_estimate = PointEstimate::median;
  cfg.threads = 3;

  const auto j = io::to_json(cfg);
  const auto back = io::sweep_config_from_json(json::parse(j.dump()));
  CHECK(io::to_json(back).dump() == j.dump());
  CHECK(back.n_grid == cfg.n_grid);
  CHECK(back.scenarios[1].control == cfg.scenarios[1].control);
  CHECK(back.sampler.fixed_k == 1.0);
}

TEST_CASE("sweep config JSON validation", "[io][json]") {
  const auto base = json::parse(io::to_json(SweepConfig::defaults()).dump());

  auto j = base;
  j["replications"] = 0;
  CHECK_THROWS_AS(io::sweep_config_from_json(j), InvalidArgument);

  j = base;
  j["bogus"] = 1;
  CHECK_THROWS(io::sweep_config_from_json(j));

  j = base;
  j["sampler"]["chans"] = 4;
  CHECK_THROWS(io::sweep_config_from_json(j));

  j = base;
  j["replications"] = -2;
  CHECK_THROWS(io::sweep_config_from_json(j));

  j = base;
  j["replications"] = 2.5;
  CHECK_THROWS(io::sweep_config_from_json(j));

  j = base;
  j["scenarios"][0]["varied"] = "scale";
  CHECK_THROWS_AS(io::sweep_config_from_json(j), InvalidArgument);

  j = base;
  j.erase("scenarios");
  CHECK(io::sweep_config_from_json(j).scenarios.size() == 4);

  const auto minimal = io::sweep_config_from_json(json::parse(
      R"({"n_grid": [100, 200], "scenarios": [{"varied": "shape", "rel_diff": 0.5}]})"));
  CHECK(minimal.replications == 10);
  CHECK(minimal.scenarios[0].control == WeibullParams(3.43e-4, 1.08));
  CHECK(minimal.scenarios[0].t_chi_target == 365.0);
}

TEST_CASE("sampler and prior JSON keep unspecified values", "[io][json]") {
  SamplerConfig base;
  base.chains = 6;
  const auto s = io::sampler_from_json(json::parse(R"({"samples": 500, "seed": 9})"), base);
  CHECK(s.samples == 500);
  CHECK(s.seed == 9);
  CHECK(s.chains == 6);

  const auto p = io::priors_from_json(json::parse(R"({"k": {"shape": 2}})"));
  CHECK(p.k_prior.shape == 2.0);
  CHECK(p.k_prior.rate == 0.001);
  CHECK_THROWS(io::priors_from_json(json::parse(R"({"k": {"shape": -1}})")));
}

TEST_CASE("fit JSON", "[io][json]") {
  PosteriorChain chain;
  chain.draws.resize(2, 2);
  chain.draws << 1e-3, 1.0, 3e-3, 2.0;
  chain.seed = 12;
  const auto j = io::fit_to_json(summarize(chain), chain);
  for (const char* key : {"mean_lambda", "mean_k", "sd_lambda", "sd_k", "ci_lambda", "ci_k", "rhat_lambda",
                          "rhat_k", "seed"}) {
    CHECK(j.contains(key));
  }
  CHECK(j["seed"] == 12);
}

TEST_CASE("write_file_atomic", "[io]") {
  const auto dir = std::filesystem::temp_directory_path() / "survcross_io_test";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "out.txt").string();
  io::write_file_atomic(path, "first\n");
  io::write_file_atomic(path, "second\n");
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(ss.str() == "second\n");
  for (const auto& e : std::filesystem::directory_iterator(dir)) CHECK(e.path().filename() == "out.txt");
  std::filesystem::remove_all(dir);

  CHECK_THROWS(io::write_file_atomic((dir / "missing" / "x.txt").string(), "x"));
}
