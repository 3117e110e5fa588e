#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <random>

#include "oracles.hpp"
#include "survcross/errors.hpp"
#include "survcross/weibull.hpp"

using namespace survcross;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const WeibullParams kControl{3.43e-4, 1.08};

WeibullParams random_params(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> log_lambda(std::log(1e-5), std::log(1e-1));
  std::uniform_real_distribution<double> k(0.3, 4.0);
  return {std::exp(log_lambda(rng)), k(rng)};
}

}  // namespace

TEST_CASE("WeibullParams rejects invalid values", "[weibull]") {
  CHECK_THROWS_AS(WeibullParams(0.0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(WeibullParams(-1e-3, 1.0), InvalidArgument);
  CHECK_THROWS_AS(WeibullParams(1e-3, 0.0), InvalidArgument);
  CHECK_THROWS_AS(WeibullParams(std::nan(""), 1.0), InvalidArgument);
  CHECK_THROWS_AS(WeibullParams(1e-3, std::numeric_limits<double>::infinity()), InvalidArgument);
  CHECK_NOTHROW(WeibullParams(1e-3, 0.5));
}

TEST_CASE("survival_prob", "[weibull]") {
  CHECK(survival_prob(kControl, 0.0) == 1.0);
  for (double k : {0.5, 1.0, 2.7}) {
    const WeibullParams p(2.5e-3, k);
    CHECK_THAT(survival_prob(p, 1.0 / p.lambda()), WithinRel(std::exp(-1.0), 1e-14));
  }
  CHECK_THAT(survival_prob(kControl, 365.0), WithinAbs(0.8995, 5e-4));
  CHECK_THROWS_AS(survival_prob(kControl, -1.0), InvalidArgument);
  CHECK_THROWS_AS(survival_prob(kControl, std::nan("")), InvalidArgument);
}

TEST_CASE("failure_prob", "[weibull]") {
  CHECK(failure_prob(kControl, 0.0) == 0.0);
  CHECK_THAT(failure_prob(kControl, 730.0), WithinAbs(0.20, 2e-3));
  CHECK_THAT(failure_prob(WeibullParams(2.33e-4, 0.913), 730.0), WithinAbs(0.18, 2e-3));
  CHECK_THAT(failure_prob(kControl, 500.0), WithinRel(1.0 - survival_prob(kControl, 500.0), 1e-14));
  CHECK_THROWS_AS(failure_prob(kControl, -0.5), InvalidArgument);
}

TEST_CASE("fit_two_points reproduces the clinical examples", "[weibull]") {
  SECTION("control 10% / 20%") {
    const auto p = fit_two_points({365, 0.10}, {730, 0.20});
    CHECK_THAT(p.lambda(), WithinAbs(3.43e-4, 0.005e-4));
    CHECK_THAT(p.k(), WithinAbs(1.08, 0.005));
    CHECK_THAT(failure_prob(p, 365), WithinAbs(0.10, 1e-10));
    CHECK_THAT(failure_prob(p, 730), WithinAbs(0.20, 1e-10));
  }
  SECTION("treatment 10% / 18%") {
    const auto p = fit_two_points({365, 0.10}, {730, 0.18});
    CHECK_THAT(p.lambda(), WithinAbs(2.33e-4, 0.005e-4));
    CHECK_THAT(p.k(), WithinAbs(0.913, 5e-4));
    CHECK_THAT(failure_prob(p, 365), WithinAbs(0.10, 1e-10));
    CHECK_THAT(failure_prob(p, 730), WithinAbs(0.18, 1e-10));
  }
  SECTION("hazard doubling gives the exponential case") {
    const auto p = fit_two_points({365, 0.10}, {730, 0.19});
    CHECK_THAT(p.k(), WithinAbs(1.0, 1e-12));
    CHECK_THAT(p.lambda(), WithinRel(-std::log(0.9) / 365.0, 1e-12));
  }
  SECTION("argument order does not matter") {
    const auto a = fit_two_points({365, 0.10}, {730, 0.20});
    const auto b = fit_two_points({730, 0.20}, {365, 0.10});
    CHECK(a == b);
  }
}

TEST_CASE("fit_two_points rejects degenerate and inconsistent points", "[weibull]") {
  CHECK_THROWS_AS(fit_two_points({365, 0.10}, {365, 0.20}), DegenerateInput);
  CHECK_THROWS_AS(fit_two_points({365, 0.20}, {730, 0.10}), InconsistentInput);
  CHECK_THROWS_AS(fit_two_points({365, 0.10}, {730, 0.10}), InconsistentInput);
  CHECK_THROWS_AS(FailurePoint(365, 1.0), InvalidArgument);
  CHECK_THROWS_AS(FailurePoint(0.0, 0.5), InvalidArgument);
}

TEST_CASE("Weibull properties hold on random parameters", "[weibull][property]") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const auto p = random_params(rng);
    const double scale = 1.0 / p.lambda();
    const double t1 = scale * std::exp(-2.0 + 1.5 * unit(rng));
    const double t2 = t1 * (1.0 + unit(rng) + 1e-3);

    // Monotonicity.
    CHECK(survival_prob(p, t2) < survival_prob(p, t1));

    // Round trip through the two-point fit.
    const auto q = fit_two_points({t1, failure_prob(p, t1)}, {t2, failure_prob(p, t2)});
    CHECK_THAT(q.lambda(), WithinRel(p.lambda(), 1e-9));
    CHECK_THAT(q.k(), WithinRel(p.k(), 1e-9));

    // Unit-scale equivariance: powers of two are exact, other factors to rounding.
    const WeibullParams halved(p.lambda() / 2.0, p.k());
    CHECK(survival_prob(halved, 2.0 * t1) == survival_prob(p, t1));
    const double c = 1.0 + 10.0 * unit(rng);
    CHECK_THAT(survival_prob(WeibullParams(p.lambda() / c, p.k()), c * t1), WithinRel(survival_prob(p, t1), 1e-13));
  }
}

TEST_CASE("sample_times", "[weibull][sampling]") {
  CHECK(sample_times(kControl, 0, 1).empty());
  CHECK(sample_times(kControl, 50, 99) == sample_times(kControl, 50, 99));
  CHECK(sample_times(kControl, 50, 99) != sample_times(kControl, 50, 100));

  const auto longer = sample_times(kControl, 80, 5);
  const auto shorter = sample_times(kControl, 30, 5);
  CHECK(std::equal(shorter.begin(), shorter.end(), longer.begin()));

  const auto times = sample_times(kControl, 100000, 2024);
  const auto below = std::count_if(times.begin(), times.end(), [](double t) { return t <= 365.0; });
  CHECK_THAT(static_cast<double>(below) / 1e5, WithinAbs(0.10, 0.005));

  const double d = oracle::ks_statistic(times, [](double t) { return 1.0 - oracle::survival(3.43e-4, 1.08, t); });
  INFO("KS distance " << d);
  CHECK(d < oracle::ks_critical_1pct(times.size()));
}

TEST_CASE("apply_censoring", "[weibull]") {
  const std::vector<double> raw{100.0, 800.0};
  const Dataset d = apply_censoring(raw, 730.0);
  REQUIRE(d.size() == 2);
  CHECK(d.events() == 1);
  CHECK(d.records()[0] == SubjectRecord{100.0, true});
  CHECK(d.records()[1] == SubjectRecord{730.0, false});

  const Dataset empty = apply_censoring(std::vector<double>{}, 730.0);
  CHECK(empty.size() == 0);
  CHECK(empty.events() == 0);

  CHECK_THROWS_AS(apply_censoring(raw, 0.0), InvalidArgument);
  CHECK_THROWS_AS(apply_censoring(raw, -5.0), InvalidArgument);

  const auto times = sample_times(kControl, 100000, 31);
  const Dataset big = apply_censoring(times, 730.0);
  CHECK_THAT(static_cast<double>(big.events()) / static_cast<double>(big.size()), WithinAbs(0.20, 0.006));
  for (const auto& r : big.records()) REQUIRE(r.time <= 730.0);
}

TEST_CASE("Dataset keeps its counts consistent", "[weibull]") {
  Dataset d;
  d.push_back({10.0, true});
  d.push_back({20.0, false});
  d.push_back({0.0, false});
  CHECK(d.size() == 3);
  CHECK(d.events() == 1);
  CHECK_THROWS_AS(d.push_back({-1.0, true}), InvalidArgument);
  CHECK(d.size() == 3);
}
