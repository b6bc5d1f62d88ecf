#include "scamsim/stats/report.hpp"

#include <cstdio>

#include "scamsim/error.hpp"

namespace scamsim::stats {

namespace {

const std::vector<std::string> kOutcomes{"scam_score", "legit_score", "sjq_scam",
                                         "sjq_legit",  "se_delta",    "response_efficacy"};

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string fmt_p(double p) {
  if (p < 1e-4) return "<0.0001";
  return fmt(p, 4);
}

}  // namespace

std::vector<std::string> preset_covariates(const std::string& dv) {
  std::vector<std::string> out{"sa6", "susceptibility", "se1", "total_system_ms", "post_survey_ms"};
  if (dv == "se_delta") out.erase(out.begin() + 2);
  return out;
}

std::vector<ModelSpec> default_model_specs() {
  std::vector<ModelSpec> out;
  for (const auto& dv : kOutcomes) out.push_back(ModelSpec{dv, dv, preset_covariates(dv), {}});
  return out;
}

std::vector<ModelSpec> model_specs_from_json(const Json& j) {
  std::vector<ModelSpec> out;
  const Json& list = j.is_object() ? j.at("models") : j;
  try {
    for (const auto& m : list) {
      ModelSpec s;
      s.dv = m.at("dv").get<std::string>();
      s.name = m.value("name", s.dv);
      s.covariates = m.contains("covariates") ? m.at("covariates").get<std::vector<std::string>>()
                                              : preset_covariates(s.dv);
      s.options.hc3 = hc3_mode_from_string(m.value("hc3", std::string("auto")));
      s.options.alpha = m.value("alpha", 0.05);
      const auto scope = m.value("rank_scope", std::string("all"));
      if (scope != "all" && scope != "dv_only") fail(ErrorCode::ParseError, "rank_scope must be all or dv_only");
      s.options.rank_scope = scope == "dv_only" ? RankScope::DvOnly : RankScope::DvAndCovariates;
      out.push_back(std::move(s));
    }
  } catch (const Json::exception& ex) {
    fail(ErrorCode::ParseError, std::string("model spec: ") + ex.what());
  }
  return out;
}

AnalysisReport analyze(const ObservationTable& table, const std::vector<ModelSpec>& specs) {
  AnalysisReport r;
  r.rows = table.rows.size();
  for (const auto& spec : specs) {
    const AncovaInput in = ancova_input(table, spec.dv, spec.covariates);
    ModelReport m{spec, ancova(in, spec.options), iman_conover_ancova(in, spec.options), posthoc_pairwise(in, spec.options)};
    r.models.push_back(std::move(m));
  }
  return r;
}

Json to_json(const AnalysisReport& r) {
  Json models = Json::array();
  for (const auto& m : r.models) {
    models.push_back(Json{{"name", m.spec.name},
                          {"dv", m.spec.dv},
                          {"covariates", m.spec.covariates},
                          {"hc3", to_string(m.spec.options.hc3)},
                          {"standard", to_json(m.standard)},
                          {"iman_conover", to_json(m.rank_based)},
                          {"factor_significant", m.standard.factor_p < m.spec.options.alpha},
                          {"posthoc", to_json(m.posthoc)}});
  }
  return Json{{"rows", r.rows}, {"models", models}};
}

std::string render_text(const AnalysisReport& r) {
  std::string out = "Observations: " + std::to_string(r.rows) + "\n";
  for (const auto& m : r.models) {
    const auto& s = m.standard;
    out += "\n== " + m.spec.name + " (dv " + m.spec.dv + ") ==\n";
    out += "covariates:";
    for (const auto& c : m.spec.covariates) out += " " + c;
    out += "\n";
    out += "ANCOVA        F(" + std::to_string(s.factor_df1) + "," + std::to_string(s.factor_df2) + ") = " +
           fmt(s.factor_f) + "  p = " + fmt_p(s.factor_p) + "  partial eta^2 = " + fmt(s.partial_eta_sq) + "\n";
    const auto& rb = m.rank_based;
    out += "Iman-Conover  F(" + std::to_string(rb.factor_df1) + "," + std::to_string(rb.factor_df2) + ") = " +
           fmt(rb.factor_f) + "  p = " + fmt_p(rb.factor_p) + "\n";
    out += "Breusch-Pagan p = " + fmt_p(s.diagnostics.breusch_pagan_p) +
           (s.diagnostics.used_hc3 ? "  (HC3 standard errors)" : "") + "\n";
    out += "residual skewness = " + fmt(s.diagnostics.residual_skewness) +
           "  excess kurtosis = " + fmt(s.diagnostics.residual_excess_kurtosis) + "\n";
    if (s.diagnostics.slopes_p) out += "homogeneity of slopes p = " + fmt_p(*s.diagnostics.slopes_p) + "\n";
    out += "adjusted means (95% CI):\n";
    for (std::size_t i = 0; i < s.levels.size(); ++i) {
      out += "  " + s.levels[i] + ": " + fmt(s.adjusted_means[i], 3) + " [" + fmt(s.ci95[i].first, 3) + ", " +
             fmt(s.ci95[i].second, 3) + "]\n";
    }
    out += "covariates:\n";
    for (const auto& c : s.covariate_tests) {
      out += "  " + c.name + ": b = " + fmt(c.coefficient, 6) + "  F = " + fmt(c.f) + "  p = " + fmt_p(c.p) + "\n";
    }
    out += "pairwise (Holm):\n";
    for (const auto& p : m.posthoc.pairs) {
      out += "  " + p.level_a + " - " + p.level_b + ": " + fmt(p.mean_diff, 3) + "  t = " + fmt(p.t, 3) +
             "  p = " + fmt_p(p.p_raw) + "  p_holm = " + fmt_p(p.p_holm) + "\n";
    }
  }
  return out;
}

}  // namespace scamsim::stats
