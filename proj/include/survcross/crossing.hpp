#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "survcross/weibull.hpp"

namespace survcross {

/// Control (arm 0) and treatment (arm 1) survival curves.
struct CurvePair {
  WeibullParams control;
  WeibullParams treatment;

  CurvePair swapped() const { return {treatment, control}; }

  friend bool operator==(const CurvePair&, const CurvePair&) = default;
};

enum class CrossingKind { unique, none_equal_shapes, identical_curves };

std::string_view to_string(CrossingKind kind);

struct CrossingResult {
  CrossingKind kind = CrossingKind::unique;
  std::optional<double> t_chi;  // set iff kind == unique

  bool is_unique() const noexcept { return kind == CrossingKind::unique; }

  /// True when a unique crossing lies in the closed window [lo, hi].
  bool within(double lo, double hi) const noexcept {
    return t_chi && *t_chi >= lo && *t_chi <= hi;
  }

  friend bool operator==(const CrossingResult&, const CrossingResult&) = default;
};

/// ln t_chi for raw parameters; requires k0 != k1.
template <typename Scalar>
Scalar crossing_log_time(Scalar lambda0, Scalar k0, Scalar lambda1, Scalar k1) {
  using std::log;
  return -(k1 * log(lambda1) - k0 * log(lambda0)) / (k1 - k0);
}

/// Where the two survival curves meet. Shapes are compared exactly.
CrossingResult crossing_point(const CurvePair& pair);

/// t_perturbed / t_true - 1.
double relative_error(double t_perturbed, double t_true);

enum class ParamTarget { lambda0, lambda1, k0, k1 };

std::string_view to_string(ParamTarget target);
ParamTarget parse_param_target(std::string_view name);

/// One-parameter relative perturbation: value -> (1 + phi) * value.
struct Perturbation {
  Perturbation(ParamTarget target, double phi);

  ParamTarget target;
  double phi;
};

CurvePair perturb(const CurvePair& pair, const Perturbation& pert);

/// Exact reference: the crossing recomputed on the perturbed pair.
CrossingResult perturbed_crossing(const CurvePair& pair, const Perturbation& pert);

/// (1 / (1 + phi))^((1 - k0/k1)^-1). Exactly t_chi'/t_chi when lambda1 is
/// perturbed by phi.
double law_lambda(double phi, double k0, double k1);

/// Shape-ratio form of the k1 error law:
/// (lambda0 t_chi)^([(1 - g)(1/phi + 1/(1 + 1/g))]^-1), g = k1/k0.
/// Agrees with the exact ratio only to first order in phi.
double law_k_gamma(double phi, const CurvePair& pair);

/// Failure-ratio form of the k1 error law:
/// z^([(1/(1 + r))(1/(phi r) - 1)]^-1), z = lambda1/lambda0,
/// r = ln(lambda0 t_chi)/ln z. Algebraically exact for a k1 perturbation.
double law_k_z(double phi, const CurvePair& pair);

/// Dimensionless quantities governing crossing sensitivity.
struct SensitivityContext {
  double gamma;             // k1 / k0
  double z;                 // lambda1 / lambda0
  std::optional<double> r;  // ln(lambda0 t_chi) / ln z, needs z != 1 and a crossing

  static SensitivityContext of(const CurvePair& pair);
};

/// Treatment arm through `control`'s curve at t_chi with k1 = gamma * k0.
CurvePair pair_with_shape_ratio(const WeibullParams& control, double gamma, double t_chi);

/// Treatment arm through `control`'s curve at t_chi with lambda1 = z * lambda0.
CurvePair pair_with_failure_ratio(const WeibullParams& control, double z, double t_chi);

// ---------------------------------------------------------------------------
// Sensitivity grids

enum class SweepKind { none, gamma, z };
enum class KLaw { z_form, gamma_form };

std::string_view to_string(SweepKind kind);

struct SensitivityRequest {
  ParamTarget target = ParamTarget::lambda1;
  std::vector<double> phi_grid;
  SweepKind sweep = SweepKind::none;
  std::vector<double> sweep_values;  // gamma or z values when sweep != none
  /// Law used for shape targets; a gamma sweep always uses the gamma form.
  KLaw k_law = KLaw::z_form;
};

/// One grid point. Missing values mark points where the crossing or the
/// law is undefined.
struct SensitivityRow {
  double abscissa;
  SweepKind abscissa_kind;  // none means the abscissa is phi
  double phi;
  ParamTarget target;
  std::optional<double> exact_ratio;
  std::optional<double> law_ratio;

  std::optional<double> exact_rel_err() const {
    return exact_ratio ? std::optional(*exact_ratio - 1.0) : std::nullopt;
  }
  std::optional<double> law_rel_err() const {
    return law_ratio ? std::optional(*law_ratio - 1.0) : std::nullopt;
  }
};

/// Rows are ordered sweep-major, then phi. Sweeps keep the control curve
/// and the pair's crossing time fixed and solve for the treatment arm.
std::vector<SensitivityRow> sensitivity_grid(const CurvePair& pair, const SensitivityRequest& request);

}  // namespace survcross
