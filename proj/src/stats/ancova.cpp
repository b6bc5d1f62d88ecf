#include "scamsim/stats/ancova.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "scamsim/error.hpp"
#include "scamsim/stats/distributions.hpp"

namespace scamsim::stats {

std::string_view to_string(Hc3Mode m) {
  switch (m) {
    case Hc3Mode::Auto: return "auto";
    case Hc3Mode::On: return "on";
    case Hc3Mode::Off: return "off";
  }
  return "auto";
}

Hc3Mode hc3_mode_from_string(std::string_view s) {
  if (s == "auto") return Hc3Mode::Auto;
  if (s == "on") return Hc3Mode::On;
  if (s == "off") return Hc3Mode::Off;
  fail(ErrorCode::InvalidArgument, "hc3 mode must be auto, on or off");
}

AncovaInput ancova_input(const ObservationTable& table, const std::string& dv,
                         const std::vector<std::string>& covariates, const std::string& factor) {
  AncovaInput in;
  in.dv = dv;
  in.groups = table.text(factor);
  const auto y = table.numeric(dv);
  in.y = Eigen::Map<const Vector>(y.data(), static_cast<Eigen::Index>(y.size()));
  in.covariate_names = covariates;
  in.covariates.resize(static_cast<Eigen::Index>(y.size()), static_cast<Eigen::Index>(covariates.size()));
  for (std::size_t c = 0; c < covariates.size(); ++c) {
    const auto col = table.numeric(covariates[c]);
    for (std::size_t r = 0; r < col.size(); ++r) {
      in.covariates(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = col[r];
    }
  }
  return in;
}

namespace {

struct Layout {
  std::vector<std::string> levels;
  std::size_t ref = 0;
  std::vector<std::size_t> dummy_levels;  // level index for each dummy column
};

Layout make_layout(const AncovaInput& in, const AncovaOptions& options) {
  if (in.groups.size() != static_cast<std::size_t>(in.y.size())) {
    fail(ErrorCode::InvalidArgument, "group labels and response length differ");
  }
  if (in.covariates.rows() != in.y.size() ||
      in.covariates.cols() != static_cast<Eigen::Index>(in.covariate_names.size())) {
    fail(ErrorCode::InvalidArgument, "covariate matrix shape does not match");
  }
  Layout l;
  const std::set<std::string> levels(in.groups.begin(), in.groups.end());
  l.levels.assign(levels.begin(), levels.end());
  if (l.levels.size() < 2) fail(ErrorCode::DegenerateFactor, "factor needs at least 2 levels");
  for (const auto& lv : l.levels) {
    if (std::count(in.groups.begin(), in.groups.end(), lv) < 2) {
      fail(ErrorCode::DegenerateFactor, "level '" + lv + "' has fewer than 2 rows");
    }
  }
  if (options.reference_level) {
    const auto it = std::find(l.levels.begin(), l.levels.end(), *options.reference_level);
    if (it == l.levels.end()) fail(ErrorCode::InvalidArgument, "unknown reference level " + *options.reference_level);
    l.ref = static_cast<std::size_t>(it - l.levels.begin());
  }
  for (std::size_t i = 0; i < l.levels.size(); ++i) {
    if (i != l.ref) l.dummy_levels.push_back(i);
  }
  return l;
}

std::size_t level_of(const Layout& l, const std::string& g) {
  return static_cast<std::size_t>(std::find(l.levels.begin(), l.levels.end(), g) - l.levels.begin());
}

// Columns: intercept, dummies (unless dropped), covariates (minus `skip_cov`), interactions.
Matrix design(const AncovaInput& in, const Layout& l, bool with_factor, int skip_cov, bool interactions) {
  const auto n = in.y.size();
  const auto k = static_cast<Eigen::Index>(l.dummy_levels.size());
  const auto c = in.covariates.cols();
  const Eigen::Index cols = 1 + (with_factor ? k : 0) + c - (skip_cov >= 0 ? 1 : 0) + (interactions ? k * c : 0);
  Matrix x = Matrix::Zero(n, cols);
  for (Eigen::Index r = 0; r < n; ++r) {
    Eigen::Index col = 0;
    x(r, col++) = 1.0;
    const std::size_t lv = level_of(l, in.groups[static_cast<std::size_t>(r)]);
    if (with_factor) {
      for (Eigen::Index d = 0; d < k; ++d) x(r, col++) = l.dummy_levels[static_cast<std::size_t>(d)] == lv ? 1.0 : 0.0;
    }
    for (Eigen::Index j = 0; j < c; ++j) {
      if (j == skip_cov) continue;
      x(r, col++) = in.covariates(r, j);
    }
    if (interactions) {
      for (Eigen::Index d = 0; d < k; ++d) {
        const double dummy = l.dummy_levels[static_cast<std::size_t>(d)] == lv ? 1.0 : 0.0;
        for (Eigen::Index j = 0; j < c; ++j) x(r, col++) = dummy * in.covariates(r, j);
      }
    }
  }
  return x;
}

struct FittedModel {
  Layout layout;
  Matrix x;
  OlsFit fit;
  Matrix cov;
  bool used_hc3 = false;
  BreuschPagan bp;
};

FittedModel fit_model(const AncovaInput& in, const AncovaOptions& options) {
  FittedModel m;
  m.layout = make_layout(in, options);
  m.x = design(in, m.layout, true, -1, false);
  m.fit = fit_ols(m.x, in.y);
  try {
    m.bp = breusch_pagan(m.x, m.fit.residuals);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::TooFewRows) throw;
  }
  m.used_hc3 = options.hc3 == Hc3Mode::On || (options.hc3 == Hc3Mode::Auto && m.bp.p_value < options.alpha);
  m.cov = m.used_hc3 ? hc3_covariance(m.x, m.fit.residuals, m.fit.hat_diagonal) : classical_covariance(m.fit);
  return m;
}

// Design row for a level at the grand covariate means.
Vector mean_row(const AncovaInput& in, const Layout& l, std::size_t level) {
  const auto k = static_cast<Eigen::Index>(l.dummy_levels.size());
  Vector v = Vector::Zero(1 + k + in.covariates.cols());
  v[0] = 1.0;
  for (Eigen::Index d = 0; d < k; ++d) v[1 + d] = l.dummy_levels[static_cast<std::size_t>(d)] == level ? 1.0 : 0.0;
  for (Eigen::Index j = 0; j < in.covariates.cols(); ++j) v[1 + k + j] = in.covariates.col(j).mean();
  return v;
}

std::pair<double, double> f_test(double ssr_reduced, double ssr_full, int df1, int df2) {
  const double num = std::max(0.0, ssr_reduced - ssr_full) / df1;
  const double den = ssr_full / df2;
  if (den <= 0.0) {
    if (num <= 0.0) return {0.0, 1.0};
    return {std::numeric_limits<double>::infinity(), 0.0};
  }
  const double f = num / den;
  return {f, f_sf(f, df1, df2)};
}

// A covariate with zero variance is aliased with the intercept; it is left out
// of the fit and reported with a zero coefficient.
AncovaInput without_constant_covariates(const AncovaInput& in, std::vector<bool>& kept) {
  kept.assign(static_cast<std::size_t>(in.covariates.cols()), true);
  std::vector<Eigen::Index> cols;
  for (Eigen::Index j = 0; j < in.covariates.cols(); ++j) {
    const auto col = in.covariates.col(j);
    if (col.size() > 0 && (col.array() == col[0]).all()) {
      kept[static_cast<std::size_t>(j)] = false;
    } else {
      cols.push_back(j);
    }
  }
  if (cols.size() == static_cast<std::size_t>(in.covariates.cols())) return in;
  AncovaInput out = in;
  out.covariate_names.clear();
  out.covariates.resize(in.y.size(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    out.covariate_names.push_back(in.covariate_names[static_cast<std::size_t>(cols[c])]);
    out.covariates.col(static_cast<Eigen::Index>(c)) = in.covariates.col(cols[c]);
  }
  return out;
}

}  // namespace

AncovaResult ancova(const AncovaInput& original, const AncovaOptions& options) {
  std::vector<bool> kept;
  const AncovaInput in = without_constant_covariates(original, kept);
  const FittedModel m = fit_model(in, options);
  const Layout& l = m.layout;
  const int n = m.fit.n;
  const int df2 = m.fit.df_residual();
  const auto k = static_cast<int>(l.dummy_levels.size());

  AncovaResult r;
  r.dv = in.dv;
  r.covariates = original.covariate_names;
  r.levels = l.levels;
  r.reference_level = l.levels[l.ref];
  r.n = n;
  r.ss_residual = m.fit.ss_residual;

  const OlsFit reduced = fit_ols(design(in, l, false, -1, false), in.y);
  r.ss_factor = std::max(0.0, reduced.ss_residual - m.fit.ss_residual);
  r.factor_df1 = k;
  r.factor_df2 = df2;
  std::tie(r.factor_f, r.factor_p) = f_test(reduced.ss_residual, m.fit.ss_residual, k, df2);
  const double denom = r.ss_factor + r.ss_residual;
  r.partial_eta_sq = denom > 0 ? r.ss_factor / denom : 0.0;

  const double tcrit = t_quantile(0.975, df2);
  for (std::size_t lv = 0; lv < l.levels.size(); ++lv) {
    const Vector row = mean_row(in, l, lv);
    const double mean = row.dot(m.fit.coeffs);
    const double se = std::sqrt(std::max(0.0, row.dot(m.cov * row)));
    r.adjusted_means.push_back(mean);
    r.adjusted_se.push_back(se);
    r.ci95.emplace_back(mean - tcrit * se, mean + tcrit * se);
  }

  for (Eigen::Index j = 0; j < in.covariates.cols(); ++j) {
    CovariateTest t;
    t.name = in.covariate_names[static_cast<std::size_t>(j)];
    t.coefficient = m.fit.coeffs[1 + k + j];
    const OlsFit drop = fit_ols(design(in, l, true, static_cast<int>(j), false), in.y);
    std::tie(t.f, t.p) = f_test(drop.ss_residual, m.fit.ss_residual, 1, df2);
    r.covariate_tests.push_back(std::move(t));
  }
  if (in.covariates.cols() != original.covariates.cols()) {
    std::vector<CovariateTest> all;
    std::size_t next = 0;
    for (std::size_t j = 0; j < kept.size(); ++j) {
      all.push_back(kept[j] ? r.covariate_tests[next++] : CovariateTest{original.covariate_names[j], 0.0, 0.0, 1.0});
    }
    r.covariate_tests = std::move(all);
  }

  auto& d = r.diagnostics;
  d.breusch_pagan_lm = m.bp.lm;
  d.breusch_pagan_p = m.bp.p_value;
  d.used_hc3 = m.used_hc3;
  const Vector& e = m.fit.residuals;
  const double mu = e.mean();
  const double m2 = (e.array() - mu).square().mean();
  if (m2 > 1e-300) {
    d.residual_skewness = (e.array() - mu).pow(3).mean() / std::pow(m2, 1.5);
    d.residual_excess_kurtosis = (e.array() - mu).pow(4).mean() / (m2 * m2) - 3.0;
  }
  if (m.used_hc3) {
    const Vector b = m.fit.coeffs.segment(1, k);
    const Matrix v = m.cov.block(1, 1, k, k);
    Eigen::FullPivLU<Matrix> lu(v);
    if (lu.isInvertible()) {
      const double w = b.dot(lu.solve(b)) / k;
      d.robust_factor_f = w;
      d.robust_factor_p = f_sf(w, k, df2);
    }
  }
  if (in.covariates.cols() > 0) {
    try {
      const OlsFit inter = fit_ols(design(in, l, true, -1, true), in.y);
      const int q = k * static_cast<int>(in.covariates.cols());
      const auto [f, p] = f_test(m.fit.ss_residual, inter.ss_residual, q, inter.df_residual());
      d.slopes_f = f;
      d.slopes_p = p;
    } catch (const Error&) {
      // Not estimable with this many rows; left unreported.
    }
  }
  return r;
}

AncovaResult ancova(const ObservationTable& table, const std::string& dv, const std::vector<std::string>& covariates,
                    const AncovaOptions& options) {
  return ancova(ancova_input(table, dv, covariates), options);
}

std::vector<double> midranks(const std::vector<double>& values) {
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && values[idx[j + 1]] == values[idx[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[idx[t]] = rank;
    i = j + 1;
  }
  return ranks;
}

namespace {

AncovaInput ranked(const AncovaInput& in, RankScope scope) {
  AncovaInput out = in;
  auto rank_col = [](const Vector& v) {
    const std::vector<double> raw(v.data(), v.data() + v.size());
    const auto r = midranks(raw);
    return Vector(Eigen::Map<const Vector>(r.data(), static_cast<Eigen::Index>(r.size())));
  };
  out.y = rank_col(in.y);
  if (scope == RankScope::DvAndCovariates) {
    for (Eigen::Index j = 0; j < in.covariates.cols(); ++j) out.covariates.col(j) = rank_col(in.covariates.col(j));
  }
  return out;
}

}  // namespace

AncovaResult iman_conover_ancova(const AncovaInput& in, const AncovaOptions& options) {
  AncovaResult r = ancova(ranked(in, options.rank_scope), options);
  r.rank_based = true;
  return r;
}

AncovaResult iman_conover_ancova(const ObservationTable& table, const std::string& dv,
                                 const std::vector<std::string>& covariates, const AncovaOptions& options) {
  return iman_conover_ancova(ancova_input(table, dv, covariates), options);
}

std::vector<double> holm_adjust(const std::vector<double>& p_values) {
  const std::size_t m = p_values.size();
  for (double p : p_values) {
    if (!(p >= 0.0 && p <= 1.0)) fail(ErrorCode::OutOfRangeP, "p-value outside [0, 1]");
  }
  std::vector<std::size_t> idx(m);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });
  std::vector<double> out(m);
  double running = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double adj = std::min(1.0, p_values[idx[i]] * static_cast<double>(m - i));
    running = std::max(running, adj);
    out[idx[i]] = running;
  }
  return out;
}

PairwiseResult posthoc_pairwise(const AncovaInput& original, const AncovaOptions& options) {
  std::vector<bool> kept;
  const AncovaInput in = without_constant_covariates(original, kept);
  const FittedModel m = fit_model(in, options);
  const Layout& l = m.layout;
  const int df2 = m.fit.df_residual();
  PairwiseResult out;
  out.used_hc3 = m.used_hc3;
  std::vector<double> raw;
  for (std::size_t a = 0; a < l.levels.size(); ++a) {
    for (std::size_t b = a + 1; b < l.levels.size(); ++b) {
      const Vector c = mean_row(in, l, a) - mean_row(in, l, b);
      PairwiseContrast pc;
      pc.level_a = l.levels[a];
      pc.level_b = l.levels[b];
      pc.mean_diff = c.dot(m.fit.coeffs);
      pc.se = std::sqrt(std::max(0.0, c.dot(m.cov * c)));
      if (pc.se > 0) {
        pc.t = pc.mean_diff / pc.se;
        pc.p_raw = t_two_sided_p(pc.t, df2);
      } else {
        pc.t = 0.0;
        pc.p_raw = pc.mean_diff == 0.0 ? 1.0 : 0.0;
      }
      raw.push_back(pc.p_raw);
      out.pairs.push_back(pc);
    }
  }
  const auto adj = holm_adjust(raw);
  for (std::size_t i = 0; i < adj.size(); ++i) out.pairs[i].p_holm = adj[i];
  return out;
}

PairwiseResult posthoc_pairwise(const ObservationTable& table, const std::string& dv,
                                const std::vector<std::string>& covariates, const AncovaOptions& options) {
  return posthoc_pairwise(ancova_input(table, dv, covariates), options);
}

namespace {

Json opt(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json finite(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

}  // namespace

Json to_json(const AncovaResult& r) {
  Json levels = Json::array();
  for (std::size_t i = 0; i < r.levels.size(); ++i) {
    levels.push_back(Json{{"level", r.levels[i]},
                          {"adjusted_mean", r.adjusted_means[i]},
                          {"se", r.adjusted_se[i]},
                          {"ci95", Json::array({r.ci95[i].first, r.ci95[i].second})}});
  }
  Json covs = Json::array();
  for (const auto& c : r.covariate_tests) {
    covs.push_back(Json{{"name", c.name}, {"coefficient", c.coefficient}, {"F", finite(c.f)}, {"p", c.p}});
  }
  const auto& d = r.diagnostics;
  return Json{{"dv", r.dv},
              {"covariates", r.covariates},
              {"rank_based", r.rank_based},
              {"n", r.n},
              {"reference_level", r.reference_level},
              {"factor_F", finite(r.factor_f)},
              {"factor_df", Json::array({r.factor_df1, r.factor_df2})},
              {"factor_p", r.factor_p},
              {"partial_eta_sq", r.partial_eta_sq},
              {"adjusted_means", levels},
              {"covariate_tests", covs},
              {"diagnostics",
               Json{{"breusch_pagan_lm", d.breusch_pagan_lm},
                    {"breusch_pagan_p", d.breusch_pagan_p},
                    {"residual_skewness", d.residual_skewness},
                    {"residual_excess_kurtosis", d.residual_excess_kurtosis},
                    {"used_hc3", d.used_hc3},
                    {"robust_factor_F", opt(d.robust_factor_f)},
                    {"robust_factor_p", opt(d.robust_factor_p)},
                    {"slopes_F", opt(d.slopes_f)},
                    {"slopes_p", opt(d.slopes_p)}}}};
}

Json to_json(const PairwiseResult& r) {
  Json pairs = Json::array();
  for (const auto& p : r.pairs) {
    pairs.push_back(Json{{"level_a", p.level_a},
                         {"level_b", p.level_b},
                         {"mean_diff", p.mean_diff},
                         {"se", p.se},
                         {"t", p.t},
                         {"p_raw", p.p_raw},
                         {"p_holm", p.p_holm}});
  }
  return Json{{"used_hc3", r.used_hc3}, {"pairs", pairs}};
}

}  // namespace scamsim::stats
