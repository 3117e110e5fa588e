#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace survcross {

/// Weibull survival parameters: failure rate lambda (1/day) and shape k.
/// Survival is S(t) = exp(-(lambda t)^k); failure is 1 - S(t).
class WeibullParams {
 public:
  WeibullParams(double lambda, double k);

  double lambda() const noexcept { return lambda_; }
  double k() const noexcept { return k_; }

  friend bool operator==(const WeibullParams&, const WeibullParams&) = default;

 private:
  double lambda_;
  double k_;
};

/// Follow-up of one subject. `event == false` means censored at `time`.
struct SubjectRecord {
  double time = 0.0;
  bool event = false;

  friend bool operator==(const SubjectRecord&, const SubjectRecord&) = default;
};

/// Ordered per-subject records of one arm, with N and E cached.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::vector<SubjectRecord> records);

  void push_back(SubjectRecord record);

  std::span<const SubjectRecord> records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  std::size_t events() const noexcept { return events_; }
  bool empty() const noexcept { return records_.empty(); }

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::vector<SubjectRecord> records_;
  std::size_t events_ = 0;
};

/// A point (t, F(t)) on a cumulative failure curve.
struct FailurePoint {
  FailurePoint(double t, double f);

  double t;
  double f;
};

/// exp(-(lambda t)^k) for raw scalars; no validation.
template <typename Scalar>
Scalar weibull_survival(Scalar lambda, Scalar k, Scalar t) {
  using std::exp;
  using std::pow;
  return exp(-pow(lambda * t, k));
}

double survival_prob(const WeibullParams& p, double t);
double failure_prob(const WeibullParams& p, double t);

/// Closed-form Weibull through two points of a failure curve.
/// Throws DegenerateInput for equal times, InconsistentInput for a
/// non-increasing failure curve.
WeibullParams fit_two_points(const FailurePoint& a, const FailurePoint& b);

/// n inverse-transform draws. The first m draws of a longer request equal
/// the draws of a request for m, so datasets grow by prefix.
std::vector<double> sample_times(const WeibullParams& p, std::size_t n, std::uint64_t seed);

/// Administrative censoring at `censor_time`: t -> (min(t, c), t <= c).
Dataset apply_censoring(std::span<const double> times, double censor_time);

}  // namespace survcross
