#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "survcross/crossing.hpp"
#include "survcross/inference.hpp"
#include "survcross/simulation.hpp"
#include "survcross/weibull.hpp"

namespace survcross::io {

/// Shortest decimal that parses back to the same double; "NA" never produced.
std::string format_double(double value);

/// Malformed CSV input; carries the 1-based line number.
class CsvError : public std::runtime_error {
 public:
  CsvError(std::size_t line, const std::string& what);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Two-arm dataset in the `arm,time,event` format.
void write_dataset_csv(std::ostream& out, const TrialData& data);
TrialData read_dataset_csv(std::istream& in);

/// `abscissa,abscissa_kind,phi,target,exact_ratio,law_ratio,exact_rel_err,law_rel_err`;
/// undefined values are empty fields.
void write_sensitivity_csv(std::ostream& out, const std::vector<SensitivityRow>& rows);

/// `chain,iter,lambda,k`.
void write_chain_csv(std::ostream& out, const PosteriorChain& chain);

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);
void write_sweep_summary_csv(std::ostream& out, const std::vector<SweepSummaryRow>& rows);

nlohmann::ordered_json fit_to_json(const FitResult& fit, const PosteriorChain& chain);

nlohmann::ordered_json to_json(const SamplerConfig& cfg);
nlohmann::ordered_json to_json(const PriorConfig& priors);
nlohmann::ordered_json to_json(const SweepConfig& cfg);

/// Missing keys keep the values already in `base`.
SamplerConfig sampler_from_json(const nlohmann::json& j, SamplerConfig base = {});
PriorConfig priors_from_json(const nlohmann::json& j, PriorConfig base = {});
SweepConfig sweep_config_from_json(const nlohmann::json& j);

/// Replaces `path` only once the full contents are ready.
void write_file_atomic(const std::string& path, const std::string& contents);

}  // namespace survcross::io
