#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "scamsim/json.hpp"
#include "scamsim/stats/ols.hpp"
#include "scamsim/stats/table.hpp"

namespace scamsim::stats {

enum class Hc3Mode { Auto, On, Off };
std::string_view to_string(Hc3Mode m);
Hc3Mode hc3_mode_from_string(std::string_view s);

enum class RankScope { DvAndCovariates, DvOnly };

struct AncovaOptions {
  Hc3Mode hc3 = Hc3Mode::Auto;
  double alpha = 0.05;
  // Dummy reference level; defaults to the alphabetically first level.
  std::optional<std::string> reference_level;
  RankScope rank_scope = RankScope::DvAndCovariates;
};

struct AncovaInput {
  std::string dv = "y";
  std::vector<std::string> groups;  // factor level per row
  Vector y;
  std::vector<std::string> covariate_names;
  Matrix covariates;  // rows × covariate_names.size()
};

AncovaInput ancova_input(const ObservationTable& table, const std::string& dv,
                         const std::vector<std::string>& covariates, const std::string& factor = "condition");

struct CovariateTest {
  std::string name;
  double coefficient = 0.0;
  double f = 0.0;
  double p = 1.0;
};

struct AncovaDiagnostics {
  double breusch_pagan_lm = 0.0;
  double breusch_pagan_p = 1.0;
  double residual_skewness = 0.0;
  double residual_excess_kurtosis = 0.0;
  bool used_hc3 = false;
  // Wald test of the factor under HC3; set when used_hc3.
  std::optional<double> robust_factor_f;
  std::optional<double> robust_factor_p;
  // Factor × covariate interaction test; absent with no covariates or too few rows.
  std::optional<double> slopes_f;
  std::optional<double> slopes_p;
};

struct AncovaResult {
  std::string dv;
  std::vector<std::string> covariates;
  std::vector<std::string> levels;  // sorted
  std::string reference_level;
  bool rank_based = false;
  int n = 0;
  double factor_f = 0.0;
  int factor_df1 = 0;
  int factor_df2 = 0;
  double factor_p = 1.0;
  double ss_factor = 0.0;
  double ss_residual = 0.0;
  double partial_eta_sq = 0.0;
  std::vector<double> adjusted_means;
  std::vector<double> adjusted_se;
  std::vector<std::pair<double, double>> ci95;
  std::vector<CovariateTest> covariate_tests;
  AncovaDiagnostics diagnostics;
};

AncovaResult ancova(const AncovaInput& input, const AncovaOptions& options = {});
AncovaResult ancova(const ObservationTable& table, const std::string& dv, const std::vector<std::string>& covariates,
                    const AncovaOptions& options = {});

/// Midranks (ties share the average rank), 1-based.
std::vector<double> midranks(const std::vector<double>& values);

/// Rank-transforms the dv (and covariates unless DvOnly) and runs ancova.
AncovaResult iman_conover_ancova(const AncovaInput& input, const AncovaOptions& options = {});
AncovaResult iman_conover_ancova(const ObservationTable& table, const std::string& dv,
                                 const std::vector<std::string>& covariates, const AncovaOptions& options = {});

/// Sort ascending, multiply by (m − i + 1), running max, cap at 1, restore order.
std::vector<double> holm_adjust(const std::vector<double>& p_values);

struct PairwiseContrast {
  std::string level_a;
  std::string level_b;
  double mean_diff = 0.0;  // adjusted mean a − b
  double se = 0.0;
  double t = 0.0;
  double p_raw = 1.0;
  double p_holm = 1.0;
};

struct PairwiseResult {
  std::vector<PairwiseContrast> pairs;
  bool used_hc3 = false;
};

/// All level pairs on adjusted means, using the same covariance as `ancova`.
PairwiseResult posthoc_pairwise(const AncovaInput& input, const AncovaOptions& options = {});
PairwiseResult posthoc_pairwise(const ObservationTable& table, const std::string& dv,
                                const std::vector<std::string>& covariates, const AncovaOptions& options = {});

Json to_json(const AncovaResult& r);
Json to_json(const PairwiseResult& r);

}  // namespace scamsim::stats
