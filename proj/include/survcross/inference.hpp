#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "survcross/crossing.hpp"
#include "survcross/errors.hpp"
#include "survcross/weibull.hpp"

namespace survcross {

/// Gamma(shape, rate) prior. rate = 0 with shape = 1 is the flat prior.
struct GammaPrior {
  GammaPrior(double shape = 1.0, double rate = 0.001);

  double shape;
  double rate;
};

struct PriorConfig {
  GammaPrior k_prior;
  GammaPrior lambda_prior;

  static PriorConfig flat() { return {GammaPrior(1.0, 0.0), GammaPrior(1.0, 0.0)}; }
};

struct SamplerConfig {
  std::size_t burn_in = 2000;
  std::size_t samples = 10000;  // kept draws per chain, after thinning
  std::size_t chains = 4;
  std::size_t thin = 1;
  double initial_step = 1.0;  // multiplies the local posterior scale on (ln lambda, ln k)
  double target_accept = 0.30;
  std::uint64_t seed = 1;
  /// Freezes the shape; only lambda is sampled (exponential sub-model when 1).
  std::optional<double> fixed_k;

  void validate() const;
};

using Draws = Eigen::Matrix<double, Eigen::Dynamic, 2>;  // columns: lambda, k

/// Pooled draws, chain-major: rows [c * per_chain, (c + 1) * per_chain) are chain c.
struct PosteriorChain {
  Draws draws;
  std::size_t chains = 1;
  double accept_rate = 0.0;
  double rhat_lambda = 1.0;
  double rhat_k = 1.0;
  std::uint64_t seed = 0;

  std::size_t size() const noexcept { return static_cast<std::size_t>(draws.rows()); }
  std::size_t per_chain() const noexcept { return chains == 0 ? 0 : size() / chains; }
  /// Flagged, not rejected, above this.
  bool converged(double threshold = 1.1) const noexcept {
    return rhat_lambda <= threshold && rhat_k <= threshold;
  }
};

struct Interval {
  double lo;
  double hi;
};

struct FitResult {
  double mean_lambda;
  double mean_k;
  double sd_lambda;
  double sd_k;
  Interval ci_lambda;  // central 95%
  Interval ci_k;
  double median_lambda;
  double median_k;
};

enum class PointEstimate { mean, median };

WeibullParams point_estimate(const FitResult& fit, PointEstimate which);

/// Data reduced to what the Weibull likelihood needs: event count, the
/// event log-time sum, and distinct positive times with multiplicities.
class SufficientStats {
 public:
  explicit SufficientStats(const Dataset& data);

  std::size_t events() const noexcept { return events_; }
  double event_log_sum() const noexcept { return event_log_sum_; }
  double total_time() const noexcept { return total_time_; }

  /// Sum over all records of (lambda t)^k, evaluated in log space.
  double hazard_sum(double log_lambda, double k) const;

  /// Terms A = sum (lambda t)^k, B = sum (lambda t)^k ln(lambda t),
  /// C = sum (lambda t)^k ln^2(lambda t).
  struct HazardMoments {
    double a, b, c;
  };
  HazardMoments hazard_moments(double log_lambda, double k) const;

 private:
  std::size_t events_ = 0;
  double event_log_sum_ = 0.0;
  double total_time_ = 0.0;
  std::vector<double> log_times_;  // distinct, ascending
  std::vector<double> counts_;
};

/// Unnormalized log posterior with gamma priors on k and lambda.
double log_posterior(double lambda, double k, const Dataset& data, const PriorConfig& priors);
double log_posterior(double lambda, double k, const SufficientStats& stats, const PriorConfig& priors);

/// Log density on (u, v) = (ln lambda, ln k), with gradient and Hessian.
/// `jacobian` adds u + v so the density is that of the log parameters.
struct LogDensity {
  double value;
  Eigen::Vector2d gradient;
  Eigen::Matrix2d hessian;
};
LogDensity log_density_uv(const Eigen::Vector2d& uv, const SufficientStats& stats, const PriorConfig& priors,
                          bool jacobian);

/// Log likelihood on (ln lambda, ln k) with derivatives.
LogDensity log_likelihood_uv(const Eigen::Vector2d& uv, const SufficientStats& stats);

/// Adaptive random-walk Metropolis on (ln lambda, ln k). Chains run
/// concurrently with seeds derived from (cfg.seed, chain index).
PosteriorChain mh_sample(const Dataset& data, const PriorConfig& priors, const SamplerConfig& cfg);

FitResult summarize(const PosteriorChain& chain);

/// Linear-interpolation quantile of an unsorted sample.
double quantile(std::vector<double> values, double p);

/// Gelman-Rubin potential scale reduction over equal-length chains.
double gelman_rubin(const Eigen::Ref<const Eigen::MatrixXd>& per_chain_columns);

class IdentifiabilityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class MleConvergenceError : public ConvergenceError {
 public:
  MleConvergenceError(const std::string& what, WeibullParams last) : ConvergenceError(what), last_(last) {}
  const WeibullParams& last_iterate() const noexcept { return last_; }

 private:
  WeibullParams last_;
};

/// Maximum likelihood (no priors) by damped Newton ascent on
/// (ln lambda, ln k) until the gradient norm drops below 1e-8.
WeibullParams mle_fit(const Dataset& data);

struct CrossingPosterior {
  std::vector<CrossingResult> results;
  double non_unique_fraction = 0.0;
  std::optional<Interval> t_chi_interval;  // central 95% among unique crossings
};

/// Pushes paired draws (by index, truncated to the shorter chain) through
/// the crossing formula.
CrossingPosterior crossing_posterior(const PosteriorChain& control, const PosteriorChain& treatment);

}  // namespace survcross
