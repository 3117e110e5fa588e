#include "survcross/crossing.hpp"

#include <string>

#include "survcross/errors.hpp"

namespace survcross {

std::string_view to_string(CrossingKind kind) {
  switch (kind) {
    case CrossingKind::unique: return "unique";
    case CrossingKind::none_equal_shapes: return "none_equal_shapes";
    case CrossingKind::identical_curves: return "identical_curves";
  }
  return "unknown";
}

std::string_view to_string(ParamTarget target) {
  switch (target) {
    case ParamTarget::lambda0: return "lambda0";
    case ParamTarget::lambda1: return "lambda1";
    case ParamTarget::k0: return "k0";
    case ParamTarget::k1: return "k1";
  }
  return "unknown";
}

ParamTarget parse_param_target(std::string_view name) {
  if (name == "lambda0" || name == "l0") return ParamTarget::lambda0;
  if (name == "lambda1" || name == "l1") return ParamTarget::lambda1;
  if (name == "k0") return ParamTarget::k0;
  if (name == "k1") return ParamTarget::k1;
  throw InvalidArgument("unknown perturbation target '" + std::string(name) + "'");
}

std::string_view to_string(SweepKind kind) {
  switch (kind) {
    case SweepKind::none: return "phi";
    case SweepKind::gamma: return "gamma";
    case SweepKind::z: return "z";
  }
  return "unknown";
}

CrossingResult crossing_point(const CurvePair& pair) {
  const auto& c = pair.control;
  const auto& t = pair.treatment;
  if (c.k() == t.k()) {
    return {c.lambda() == t.lambda() ? CrossingKind::identical_curves : CrossingKind::none_equal_shapes,
            std::nullopt};
  }
  return {CrossingKind::unique, std::exp(crossing_log_time(c.lambda(), c.k(), t.lambda(), t.k()))};
}

double relative_error(double t_perturbed, double t_true) {
  if (!(t_true > 0.0)) throw InvalidArgument("reference crossing time must be positive");
  return t_perturbed / t_true - 1.0;
}

Perturbation::Perturbation(ParamTarget target_, double phi_) : target(target_), phi(phi_) {
  if (!std::isfinite(phi) || phi <= -1.0) {
    throw InvalidArgument("relative perturbation must exceed -1");
  }
}

CurvePair perturb(const CurvePair& pair, const Perturbation& pert) {
  const double f = 1.0 + pert.phi;
  const auto& c = pair.control;
  const auto& t = pair.treatment;
  switch (pert.target) {
    case ParamTarget::lambda0: return {{c.lambda() * f, c.k()}, t};
    case ParamTarget::lambda1: return {c, {t.lambda() * f, t.k()}};
    case ParamTarget::k0: return {{c.lambda(), c.k() * f}, t};
    case ParamTarget::k1: return {c, {t.lambda(), t.k() * f}};
  }
  return pair;
}

CrossingResult perturbed_crossing(const CurvePair& pair, const Perturbation& pert) {
  if (pert.phi == 0.0) return crossing_point(pair);
  return crossing_point(perturb(pair, pert));
}

double law_lambda(double phi, double k0, double k1) {
  if (k0 == k1) throw DegenerateInput("lambda law undefined for equal shapes");
  if (!(phi > -1.0)) throw InvalidArgument("relative perturbation must exceed -1");
  using LD = long double;
  return static_cast<double>(std::pow(LD(1) / (LD(1) + phi), LD(1) / (LD(1) - LD(k0) / LD(k1))));
}

namespace {

double require_crossing(const CurvePair& pair) {
  const auto res = crossing_point(pair);
  if (!res.is_unique()) throw DegenerateInput("curve pair has no unique crossing");
  return *res.t_chi;
}

}  // namespace

double law_k_gamma(double phi, const CurvePair& pair) {
  const double gamma = pair.treatment.k() / pair.control.k();
  if (gamma == 1.0) throw DegenerateInput("gamma-form law undefined for equal shapes");
  if (phi == 0.0) throw InvalidArgument("gamma-form law undefined at phi = 0");
  const double t_chi = require_crossing(pair);
  const double exponent = 1.0 / ((1.0 - gamma) * (1.0 / phi + 1.0 / (1.0 + 1.0 / gamma)));
  return std::pow(pair.control.lambda() * t_chi, exponent);
}

double law_k_z(double phi, const CurvePair& pair) {
  const auto& c = pair.control;
  const auto& t = pair.treatment;
  if (t.lambda() == c.lambda()) throw DegenerateInput("z-form law undefined for equal failure rates");
  require_crossing(pair);
  // Extended precision: near phi * r = 1 the exponent is huge and double
  // rounding in r would show up in the ratio.
  using LD = long double;
  const LD log_z = std::log(LD(t.lambda())) - std::log(LD(c.lambda()));
  const LD log_h0 =
      std::log(LD(c.lambda())) + crossing_log_time<LD>(c.lambda(), c.k(), t.lambda(), t.k());
  const LD r = log_h0 / log_z;
  const LD pr = LD(phi) * r;
  if (std::abs(pr - 1) < 1e-12L) throw DegenerateInput("z-form law is singular at phi * r = 1");
  // z^([(1/(1 + r))(1/(phi r) - 1)]^-1)
  const LD exponent = LD(1) / ((LD(1) / (LD(1) + r)) * (LD(1) / pr - LD(1)));
  return static_cast<double>(std::exp(exponent * log_z));
}

SensitivityContext SensitivityContext::of(const CurvePair& pair) {
  SensitivityContext ctx{pair.treatment.k() / pair.control.k(),
                         pair.treatment.lambda() / pair.control.lambda(), std::nullopt};
  const auto res = crossing_point(pair);
  if (ctx.z != 1.0 && res.is_unique()) {
    ctx.r = std::log(pair.control.lambda() * *res.t_chi) / std::log(ctx.z);
  }
  return ctx;
}

CurvePair pair_with_shape_ratio(const WeibullParams& control, double gamma, double t_chi) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidArgument("shape ratio must be positive");
  if (!(t_chi > 0.0) || !std::isfinite(t_chi)) throw InvalidArgument("crossing time must be positive");
  if (gamma == 1.0) throw DegenerateInput("equal shapes never cross");
  const double k1 = gamma * control.k();
  const double lambda1 = std::exp((control.k() / k1) * std::log(control.lambda() * t_chi)) / t_chi;
  return {control, {lambda1, k1}};
}

CurvePair pair_with_failure_ratio(const WeibullParams& control, double z, double t_chi) {
  if (!(z > 0.0) || !std::isfinite(z)) throw InvalidArgument("failure ratio must be positive");
  if (!(t_chi > 0.0) || !std::isfinite(t_chi)) throw InvalidArgument("crossing time must be positive");
  if (z == 1.0) throw DegenerateInput("equal failure rates force equal shapes");
  const double lambda1 = z * control.lambda();
  const double log_h1 = std::log(lambda1 * t_chi);
  if (log_h1 == 0.0) throw DegenerateInput("treatment shape undefined when lambda1 * t_chi = 1");
  const double k1 = control.k() * std::log(control.lambda() * t_chi) / log_h1;
  if (!(k1 > 0.0) || !std::isfinite(k1)) {
    throw InconsistentInput("no positive treatment shape crosses at the requested time");
  }
  return {control, {lambda1, k1}};
}

namespace {

std::optional<double> exact_ratio(const CurvePair& pair, double t_chi, const Perturbation& pert) {
  const auto res = perturbed_crossing(pair, pert);
  if (!res.is_unique()) return std::nullopt;
  return *res.t_chi / t_chi;
}

template <typename F>
std::optional<double> guarded(F&& f) {
  try {
    const double v = f();
    return std::isfinite(v) ? std::optional(v) : std::nullopt;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

std::optional<double> law_ratio(const CurvePair& pair, const Perturbation& pert, KLaw k_law) {
  const auto& c = pair.control;
  const auto& t = pair.treatment;
  return guarded([&] {
    switch (pert.target) {
      case ParamTarget::lambda1: return law_lambda(pert.phi, c.k(), t.k());
      case ParamTarget::lambda0: return law_lambda(pert.phi, t.k(), c.k());
      case ParamTarget::k1:
        return k_law == KLaw::gamma_form ? law_k_gamma(pert.phi, pair) : law_k_z(pert.phi, pair);
      case ParamTarget::k0:
        return k_law == KLaw::gamma_form ? law_k_gamma(pert.phi, pair.swapped())
                                         : law_k_z(pert.phi, pair.swapped());
    }
    return std::nan("");
  });
}

void append_rows(std::vector<SensitivityRow>& rows, const std::optional<CurvePair>& pair, double abscissa,
                 SweepKind kind, const SensitivityRequest& req, KLaw k_law) {
  std::optional<double> t_chi;
  if (pair) {
    const auto res = crossing_point(*pair);
    if (res.is_unique()) t_chi = res.t_chi;
  }
  for (double phi : req.phi_grid) {
    SensitivityRow row{kind == SweepKind::none ? phi : abscissa, kind, phi, req.target, std::nullopt,
                       std::nullopt};
    if (t_chi && phi > -1.0) {
      const Perturbation pert(req.target, phi);
      row.exact_ratio = exact_ratio(*pair, *t_chi, pert);
      row.law_ratio = law_ratio(*pair, pert, k_law);
    }
    rows.push_back(row);
  }
}

}  // namespace

std::vector<SensitivityRow> sensitivity_grid(const CurvePair& pair, const SensitivityRequest& request) {
  if (request.phi_grid.empty()) throw InvalidArgument("phi grid must not be empty");
  std::vector<SensitivityRow> rows;
  if (request.sweep == SweepKind::none) {
    append_rows(rows, pair, 0.0, SweepKind::none, request, request.k_law);
    return rows;
  }
  if (request.sweep_values.empty()) throw InvalidArgument("sweep values must not be empty");
  const auto base = crossing_point(pair);
  if (!base.is_unique()) throw DegenerateInput("a sweep needs a base pair with a unique crossing");
  const KLaw k_law = request.sweep == SweepKind::gamma ? KLaw::gamma_form : request.k_law;
  for (double v : request.sweep_values) {
    std::optional<CurvePair> swept;
    try {
      swept = request.sweep == SweepKind::gamma ? pair_with_shape_ratio(pair.control, v, *base.t_chi)
                                                : pair_with_failure_ratio(pair.control, v, *base.t_chi);
    } catch (const std::exception&) {
      swept.reset();
    }
    append_rows(rows, swept, v, request.sweep, request, k_law);
  }
  return rows;
}

}  // namespace survcross
