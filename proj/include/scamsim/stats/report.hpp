#pragma once

#include <string>
#include <vector>

#include "scamsim/stats/ancova.hpp"

namespace scamsim::stats {

struct ModelSpec {
  std::string name;
  std::string dv;
  std::vector<std::string> covariates;
  AncovaOptions options;
};

/// Covariates for a dv: SA-6, susceptibility, pre self-efficacy, time on the
/// system and post-survey time; the self-efficacy change model drops se1.
std::vector<std::string> preset_covariates(const std::string& dv);

/// One spec per outcome column with its preset covariates.
std::vector<ModelSpec> default_model_specs();

std::vector<ModelSpec> model_specs_from_json(const Json& j);

struct ModelReport {
  ModelSpec spec;
  AncovaResult standard;
  AncovaResult rank_based;
  PairwiseResult posthoc;
};

struct AnalysisReport {
  std::size_t rows = 0;
  std::vector<ModelReport> models;
};

/// Runs the standard ANCOVA, its Iman-Conover twin and Holm post-hoc tests per spec.
AnalysisReport analyze(const ObservationTable& table, const std::vector<ModelSpec>& specs);

Json to_json(const AnalysisReport& r);
std::string render_text(const AnalysisReport& r);

}  // namespace scamsim::stats
