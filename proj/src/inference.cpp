#include "survcross/inference.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numeric>
#include <random>

#include "detail/unit_uniform.hpp"
#include "survcross/seed.hpp"

namespace survcross {

GammaPrior::GammaPrior(double shape_, double rate_) : shape(shape_), rate(rate_) {
  if (!std::isfinite(shape) || shape <= 0.0) throw InvalidArgument("gamma prior shape must be positive");
  if (!std::isfinite(rate) || rate < 0.0) throw InvalidArgument("gamma prior rate must be non-negative");
}

void SamplerConfig::validate() const {
  if (samples == 0) throw InvalidArgument("sampler needs at least one kept draw per chain");
  if (chains < 2) throw InvalidArgument("sampler needs at least two chains for convergence diagnostics");
  if (thin == 0) throw InvalidArgument("thinning interval must be at least 1");
  if (!std::isfinite(initial_step) || initial_step <= 0.0) throw InvalidArgument("initial step must be positive");
  if (!(target_accept > 0.0 && target_accept < 1.0)) throw InvalidArgument("target acceptance must lie in (0, 1)");
  if (fixed_k && !(std::isfinite(*fixed_k) && *fixed_k > 0.0)) throw InvalidArgument("fixed shape must be positive");
}

WeibullParams point_estimate(const FitResult& fit, PointEstimate which) {
  return which == PointEstimate::mean ? WeibullParams(fit.mean_lambda, fit.mean_k)
                                      : WeibullParams(fit.median_lambda, fit.median_k);
}

// ---------------------------------------------------------------------------
// Sufficient statistics

SufficientStats::SufficientStats(const Dataset& data) {
  std::vector<double> event_logs;
  std::vector<double> times;
  for (const auto& r : data.records()) {
    if (r.event) {
      if (r.time <= 0.0) throw InvalidArgument("event at time 0 has undefined log time");
      event_logs.push_back(std::log(r.time));
      ++events_;
    }
    // (lambda t)^k vanishes at t = 0.
    if (r.time > 0.0) times.push_back(r.time);
  }
  // Canonical ordering makes every sum independent of record order.
  std::sort(event_logs.begin(), event_logs.end());
  event_log_sum_ = std::accumulate(event_logs.begin(), event_logs.end(), 0.0);
  std::sort(times.begin(), times.end());
  total_time_ = std::accumulate(times.begin(), times.end(), 0.0);
  for (std::size_t i = 0; i < times.size();) {
    std::size_t j = i;
    while (j < times.size() && times[j] == times[i]) ++j;
    log_times_.push_back(std::log(times[i]));
    counts_.push_back(static_cast<double>(j - i));
    i = j;
  }
}

double SufficientStats::hazard_sum(double log_lambda, double k) const {
  double a = 0.0;
  for (std::size_t i = 0; i < log_times_.size(); ++i) a += counts_[i] * std::exp(k * (log_lambda + log_times_[i]));
  return a;
}

SufficientStats::HazardMoments SufficientStats::hazard_moments(double log_lambda, double k) const {
  HazardMoments m{0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < log_times_.size(); ++i) {
    const double w = log_lambda + log_times_[i];
    const double term = counts_[i] * std::exp(k * w);
    m.a += term;
    m.b += term * w;
    m.c += term * w * w;
  }
  return m;
}

// ---------------------------------------------------------------------------
// Densities

double log_posterior(double lambda, double k, const SufficientStats& stats, const PriorConfig& priors) {
  if (!(lambda > 0.0) || !(k > 0.0) || !std::isfinite(lambda) || !std::isfinite(k)) {
    throw InvalidArgument("log posterior needs positive lambda and k");
  }
  const double e = static_cast<double>(stats.events());
  const double alpha = priors.k_prior.shape, beta = priors.k_prior.rate;
  const double gamma = priors.lambda_prior.shape, eta = priors.lambda_prior.rate;
  const double log_lambda = std::log(lambda);
  return (e + alpha - 1.0) * std::log(k) + (k * e + gamma - 1.0) * log_lambda + (k - 1.0) * stats.event_log_sum() -
         (stats.hazard_sum(log_lambda, k) + beta * k + eta * lambda);
}

double log_posterior(double lambda, double k, const Dataset& data, const PriorConfig& priors) {
  return log_posterior(lambda, k, SufficientStats(data), priors);
}

LogDensity log_density_uv(const Eigen::Vector2d& uv, const SufficientStats& stats, const PriorConfig& priors,
                          bool jacobian) {
  const double u = uv(0), v = uv(1);
  const double k = std::exp(v), lambda = std::exp(u);
  const double e = static_cast<double>(stats.events());
  const double l = stats.event_log_sum();
  const double alpha = priors.k_prior.shape, beta = priors.k_prior.rate;
  const double gamma = priors.lambda_prior.shape, eta = priors.lambda_prior.rate;
  const double jac = jacobian ? 1.0 : 0.0;
  const auto m = stats.hazard_moments(u, k);

  LogDensity d;
  d.value = (e + alpha - 1.0) * v + (k * e + gamma - 1.0) * u + (k - 1.0) * l - m.a - beta * k - eta * lambda +
            jac * (u + v);
  d.gradient(0) = k * e + gamma - 1.0 - k * m.a - eta * lambda + jac;
  d.gradient(1) = e + alpha - 1.0 + k * (e * u + l - m.b - beta) + jac;
  d.hessian(0, 0) = -k * k * m.a - eta * lambda;
  d.hessian(0, 1) = d.hessian(1, 0) = k * (e - m.a - k * m.b);
  d.hessian(1, 1) = k * (e * u + l - m.b - beta) - k * k * m.c;
  return d;
}

LogDensity log_likelihood_uv(const Eigen::Vector2d& uv, const SufficientStats& stats) {
  return log_density_uv(uv, stats, PriorConfig::flat(), false);
}

// ---------------------------------------------------------------------------
// Sampler

namespace {

struct LocalGaussian {
  Eigen::Vector2d mode;
  Eigen::Matrix2d chol;  // lower Cholesky factor of the proposal shape
};

// Laplace approximation of the log-scale posterior; falls back to a unit
// scale around a moment-based start when the mode search fails.
LocalGaussian local_gaussian(const SufficientStats& stats, const PriorConfig& priors, std::optional<double> fixed_k) {
  const double e = std::max<double>(static_cast<double>(stats.events()), 1.0);
  const double scale = stats.total_time() > 0.0 ? stats.total_time() : 1.0;
  Eigen::Vector2d x(std::log(e / scale), fixed_k ? std::log(*fixed_k) : 0.0);
  const bool one_d = fixed_k.has_value();

  auto restrict = [one_d](LogDensity d) {
    if (one_d) {
      d.gradient(1) = 0.0;
      d.hessian(0, 1) = d.hessian(1, 0) = 0.0;
      d.hessian(1, 1) = -1.0;
    }
    return d;
  };

  LocalGaussian fallback{x, Eigen::Matrix2d::Identity() * 0.5};
  if (one_d) fallback.chol(1, 1) = 0.0;

  auto d = restrict(log_density_uv(x, stats, priors, true));
  for (int iter = 0; iter < 200; ++iter) {
    if (!std::isfinite(d.value)) return fallback;
    Eigen::LLT<Eigen::Matrix2d> llt(-d.hessian);
    const Eigen::Vector2d dir =
        llt.info() == Eigen::Success ? Eigen::Vector2d(llt.solve(d.gradient)) : Eigen::Vector2d(0.1 * d.gradient);
    double t = 1.0;
    LogDensity next;
    Eigen::Vector2d candidate;
    for (;;) {
      candidate = x + t * dir;
      next = restrict(log_density_uv(candidate, stats, priors, true));
      if (std::isfinite(next.value) && next.value >= d.value - 1e-12 * std::abs(d.value)) break;
      t *= 0.5;
      if (t < 1e-10) return fallback;
    }
    x = candidate;
    d = next;
    if (d.gradient.norm() < 1e-9) break;
  }
  Eigen::LLT<Eigen::Matrix2d> llt(-d.hessian);
  if (llt.info() != Eigen::Success) return {x, fallback.chol};
  Eigen::Matrix2d cov = llt.solve(Eigen::Matrix2d::Identity());
  if (one_d) {
    cov(0, 1) = cov(1, 0) = cov(1, 1) = 0.0;
    return {x, Eigen::Matrix2d{{std::sqrt(cov(0, 0)), 0.0}, {0.0, 0.0}}};
  }
  return {x, cov.llt().matrixL()};
}

struct ChainRun {
  Draws draws;
  std::size_t accepted = 0;
  std::size_t proposed = 0;
};

ChainRun run_chain(const SufficientStats& stats, const PriorConfig& priors, const SamplerConfig& cfg,
                   const LocalGaussian& local, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const double e = static_cast<double>(stats.events());
  const double alpha = priors.k_prior.shape, beta = priors.k_prior.rate;
  const double gamma = priors.lambda_prior.shape, eta = priors.lambda_prior.rate;

  // Log density of (ln lambda, ln k), Jacobian included.
  auto log_target = [&](const Eigen::Vector2d& x) {
    const double u = x(0), v = x(1);
    const double k = std::exp(v);
    return (e + alpha) * v + (k * e + gamma) * u + (k - 1.0) * stats.event_log_sum() - stats.hazard_sum(u, k) -
           beta * k - eta * std::exp(u);
  };
  auto jitter = [&] { return Eigen::Vector2d(normal(rng), normal(rng)); };

  Eigen::Vector2d x = local.mode + 2.0 * local.chol * jitter();
  double current = log_target(x);
  if (!std::isfinite(current)) {
    x = local.mode;
    current = log_target(x);
  }

  double log_step = std::log(cfg.initial_step);
  ChainRun run;
  run.draws.resize(static_cast<Eigen::Index>(cfg.samples), 2);
  const std::size_t total = cfg.burn_in + cfg.samples * cfg.thin;
  for (std::size_t i = 0; i < total; ++i) {
    const Eigen::Vector2d proposal = x + std::exp(log_step) * (local.chol * jitter());
    const double candidate = log_target(proposal);
    const double log_ratio = candidate - current;
    const double accept_prob = std::isfinite(candidate) ? std::min(1.0, std::exp(log_ratio)) : 0.0;
    const bool accept = detail::open_unit(rng) < accept_prob;
    if (accept) {
      x = proposal;
      current = candidate;
    }
    if (i < cfg.burn_in) {
      // Robbins-Monro step toward the target acceptance rate; frozen afterwards.
      log_step += (accept_prob - cfg.target_accept) / std::pow(static_cast<double>(i) + 1.0, 0.6);
      continue;
    }
    ++run.proposed;
    if (accept) ++run.accepted;
    const std::size_t kept = i - cfg.burn_in + 1;
    if (kept % cfg.thin == 0) {
      const auto row = static_cast<Eigen::Index>(kept / cfg.thin - 1);
      run.draws(row, 0) = std::exp(x(0));
      run.draws(row, 1) = std::exp(x(1));
    }
  }
  return run;
}

}  // namespace

PosteriorChain mh_sample(const Dataset& data, const PriorConfig& priors, const SamplerConfig& cfg) {
  cfg.validate();
  if (data.empty()) throw InvalidArgument("posterior sampling needs at least one subject");
  const SufficientStats stats(data);
  const LocalGaussian local = local_gaussian(stats, priors, cfg.fixed_k);

  std::vector<std::future<ChainRun>> futures;
  futures.reserve(cfg.chains);
  for (std::size_t c = 0; c < cfg.chains; ++c) {
    futures.push_back(std::async(std::launch::async, run_chain, std::cref(stats), std::cref(priors), std::cref(cfg),
                                 std::cref(local), derive_seed({cfg.seed, c})));
  }

  PosteriorChain chain;
  chain.chains = cfg.chains;
  chain.seed = cfg.seed;
  chain.draws.resize(static_cast<Eigen::Index>(cfg.chains * cfg.samples), 2);
  Eigen::MatrixXd lambda_cols(cfg.samples, cfg.chains);
  Eigen::MatrixXd k_cols(cfg.samples, cfg.chains);
  std::size_t accepted = 0, proposed = 0;
  for (std::size_t c = 0; c < cfg.chains; ++c) {
    ChainRun run = futures[c].get();
    const auto n = static_cast<Eigen::Index>(cfg.samples);
    chain.draws.middleRows(static_cast<Eigen::Index>(c) * n, n) = run.draws;
    lambda_cols.col(static_cast<Eigen::Index>(c)) = run.draws.col(0);
    k_cols.col(static_cast<Eigen::Index>(c)) = run.draws.col(1);
    accepted += run.accepted;
    proposed += run.proposed;
  }
  chain.accept_rate = proposed == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(proposed);
  chain.rhat_lambda = gelman_rubin(lambda_cols);
  chain.rhat_k = gelman_rubin(k_cols);
  return chain;
}

double gelman_rubin(const Eigen::Ref<const Eigen::MatrixXd>& cols) {
  const auto n = static_cast<double>(cols.rows());
  const auto m = static_cast<double>(cols.cols());
  if (cols.rows() < 2 || cols.cols() < 2) return std::numeric_limits<double>::quiet_NaN();
  const Eigen::RowVectorXd means = cols.colwise().mean();
  const double within = (cols.rowwise() - means).colwise().squaredNorm().sum() / (m * (n - 1.0));
  const double between = n * (means.array() - means.mean()).square().sum() / (m - 1.0);
  if (within == 0.0) return between == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  const double pooled = (n - 1.0) / n * within + between / n;
  return std::sqrt(pooled / within);
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw InvalidArgument("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("quantile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
}

FitResult summarize(const PosteriorChain& chain) {
  if (chain.size() == 0) throw InvalidArgument("cannot summarize an empty chain");
  const Eigen::RowVector2d mean = chain.draws.colwise().mean();
  Eigen::RowVector2d sd = Eigen::RowVector2d::Zero();
  if (chain.size() > 1) {
    sd = ((chain.draws.rowwise() - mean).colwise().squaredNorm() / static_cast<double>(chain.size() - 1))
             .cwiseSqrt();
  }
  auto column = [&](int c) {
    return std::vector<double>(chain.draws.col(c).begin(), chain.draws.col(c).end());
  };
  const auto lambdas = column(0);
  const auto ks = column(1);
  return {mean(0),
          mean(1),
          sd(0),
          sd(1),
          {quantile(lambdas, 0.025), quantile(lambdas, 0.975)},
          {quantile(ks, 0.025), quantile(ks, 0.975)},
          quantile(lambdas, 0.5),
          quantile(ks, 0.5)};
}

// ---------------------------------------------------------------------------
// Maximum likelihood

WeibullParams mle_fit(const Dataset& data) {
  const SufficientStats stats(data);
  if (stats.events() < 2) throw IdentifiabilityError("maximum likelihood needs at least two events");
  Eigen::Vector2d x(std::log(static_cast<double>(stats.events()) / stats.total_time()), 0.0);
  auto d = log_likelihood_uv(x, stats);
  constexpr int kMaxIter = 500;
  for (int iter = 0; iter < kMaxIter; ++iter) {
    if (d.gradient.norm() < 1e-8) return {std::exp(x(0)), std::exp(x(1))};
    Eigen::LLT<Eigen::Matrix2d> llt(-d.hessian);
    Eigen::Vector2d dir = llt.info() == Eigen::Success ? Eigen::Vector2d(llt.solve(d.gradient))
                                                      : Eigen::Vector2d(d.gradient / (1.0 + d.gradient.norm()));
    double t = 1.0;
    for (;;) {
      const Eigen::Vector2d candidate = x + t * dir;
      auto next = log_likelihood_uv(candidate, stats);
      // Near the optimum the value change drowns in rounding; accept non-decrease.
      if (std::isfinite(next.value) && next.value >= d.value - 1e-13 * std::abs(d.value)) {
        x = candidate;
        d = next;
        break;
      }
      t *= 0.5;
      if (t < 1e-12) {
        throw MleConvergenceError("line search failed", WeibullParams(std::exp(x(0)), std::exp(x(1))));
      }
    }
  }
  if (d.gradient.norm() < 1e-8) return {std::exp(x(0)), std::exp(x(1))};
  throw MleConvergenceError("maximum likelihood did not converge", WeibullParams(std::exp(x(0)), std::exp(x(1))));
}

// ---------------------------------------------------------------------------
// Crossing uncertainty

CrossingPosterior crossing_posterior(const PosteriorChain& control, const PosteriorChain& treatment) {
  if (control.size() == 0 || treatment.size() == 0) throw InvalidArgument("crossing posterior needs non-empty chains");
  const std::size_t n = std::min(control.size(), treatment.size());
  CrossingPosterior out;
  out.results.reserve(n);
  std::vector<double> times;
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const CurvePair pair{{control.draws(r, 0), control.draws(r, 1)}, {treatment.draws(r, 0), treatment.draws(r, 1)}};
    out.results.push_back(crossing_point(pair));
    if (out.results.back().is_unique()) times.push_back(*out.results.back().t_chi);
  }
  out.non_unique_fraction = static_cast<double>(n - times.size()) / static_cast<double>(n);
  if (!times.empty()) out.t_chi_interval = Interval{quantile(times, 0.025), quantile(times, 0.975)};
  return out;
}

}  // namespace survcross
