#include "survcross/weibull.hpp"

#include <random>
#include <string>

#include "detail/unit_uniform.hpp"
#include "survcross/errors.hpp"

namespace survcross {

namespace {

void require_time(double t) {
  if (!std::isfinite(t) || t < 0.0) {
    throw InvalidArgument("time must be finite and non-negative, got " + std::to_string(t));
  }
}

}  // namespace

WeibullParams::WeibullParams(double lambda, double k) : lambda_(lambda), k_(k) {
  if (!std::isfinite(lambda) || lambda <= 0.0) {
    throw InvalidArgument("Weibull failure rate must be finite and positive");
  }
  if (!std::isfinite(k) || k <= 0.0) {
    throw InvalidArgument("Weibull shape must be finite and positive");
  }
}

Dataset::Dataset(std::vector<SubjectRecord> records) {
  records_.reserve(records.size());
  for (const auto& r : records) push_back(r);
}

void Dataset::push_back(SubjectRecord record) {
  require_time(record.time);
  records_.push_back(record);
  if (record.event) ++events_;
}

FailurePoint::FailurePoint(double t_, double f_) : t(t_), f(f_) {
  if (!std::isfinite(t) || t <= 0.0) throw InvalidArgument("failure point time must be positive");
  if (!(f > 0.0 && f < 1.0)) throw InvalidArgument("failure probability must lie in (0, 1)");
}

double survival_prob(const WeibullParams& p, double t) {
  require_time(t);
  return weibull_survival(p.lambda(), p.k(), t);
}

double failure_prob(const WeibullParams& p, double t) {
  require_time(t);
  // -expm1 keeps precision where the failure probability is tiny.
  return -std::expm1(-std::pow(p.lambda() * t, p.k()));
}

WeibullParams fit_two_points(const FailurePoint& a, const FailurePoint& b) {
  if (a.t == b.t) throw DegenerateInput("two-point fit needs distinct times");
  const FailurePoint& early = a.t < b.t ? a : b;
  const FailurePoint& late = a.t < b.t ? b : a;
  if (late.f <= early.f) {
    throw InconsistentInput("failure probability must increase with time");
  }
  // Cumulative hazard H = -ln(1 - F) = (lambda t)^k is linear in ln t on log axes.
  const double h_early = -std::log1p(-early.f);
  const double h_late = -std::log1p(-late.f);
  const double k = std::log(h_late / h_early) / std::log(late.t / early.t);
  const double lambda = std::pow(h_early, 1.0 / k) / early.t;
  return {lambda, k};
}

std::vector<double> sample_times(const WeibullParams& p, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> times;
  times.reserve(n);
  const double inv_k = 1.0 / p.k();
  for (std::size_t i = 0; i < n; ++i) {
    times.push_back(std::pow(-std::log(detail::open_unit(rng)), inv_k) / p.lambda());
  }
  return times;
}

Dataset apply_censoring(std::span<const double> times, double censor_time) {
  if (!std::isfinite(censor_time) || censor_time <= 0.0) {
    throw InvalidArgument("censor time must be positive");
  }
  std::vector<SubjectRecord> records;
  records.reserve(times.size());
  for (double t : times) {
    require_time(t);
    records.push_back(t <= censor_time ? SubjectRecord{t, true} : SubjectRecord{censor_time, false});
  }
  return Dataset(std::move(records));
}

}  // namespace survcross
