#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "scamsim/error.hpp"
#include "scamsim/stats/ancova.hpp"
#include "scamsim/stats/distributions.hpp"
#include "scamsim/stats/ols.hpp"

using namespace scamsim;
using namespace scamsim::stats;

namespace {

using Rows = std::vector<std::vector<double>>;

// Gauss-Jordan inverse with partial pivoting, kept independent of Eigen.
Rows invert(Rows a) {
  const std::size_t n = a.size();
  Rows inv(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    }
    std::swap(a[c], a[piv]);
    std::swap(inv[c], inv[piv]);
    const double d = a[c][c];
    for (std::size_t k = 0; k < n; ++k) {
      a[c][k] /= d;
      inv[c][k] /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = a[r][c];
      for (std::size_t k = 0; k < n; ++k) {
        a[r][k] -= f * a[c][k];
        inv[r][k] -= f * inv[c][k];
      }
    }
  }
  return inv;
}

Rows to_rows(const Matrix& m) {
  Rows r(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) r[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
  }
  return r;
}

Rows xtx(const Rows& x) {
  const std::size_t p = x[0].size();
  Rows out(p, std::vector<double>(p, 0.0));
  for (const auto& row : x) {
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = 0; j < p; ++j) out[i][j] += row[i] * row[j];
    }
  }
  return out;
}

std::vector<double> normal_equations(const Rows& x, const std::vector<double>& y) {
  const std::size_t p = x[0].size();
  std::vector<double> xty(p, 0.0);
  for (std::size_t r = 0; r < x.size(); ++r) {
    for (std::size_t i = 0; i < p; ++i) xty[i] += x[r][i] * y[r];
  }
  const Rows inv = invert(xtx(x));
  std::vector<double> b(p, 0.0);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j) b[i] += inv[i][j] * xty[j];
  }
  return b;
}

// One-way ANOVA by direct sums of squares.
struct Anova {
  double f, p, eta;
};
Anova oneway(const std::vector<std::string>& g, const std::vector<double>& y) {
  std::map<std::string, std::pair<double, int>> sums;
  double total = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    sums[g[i]].first += y[i];
    sums[g[i]].second += 1;
    total += y[i];
  }
  const double grand = total / static_cast<double>(y.size());
  double ssb = 0, ssw = 0;
  for (auto& [k, v] : sums) ssb += v.second * std::pow(v.first / v.second - grand, 2);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const auto& s = sums[g[i]];
    ssw += std::pow(y[i] - s.first / s.second, 2);
  }
  const double df1 = static_cast<double>(sums.size() - 1);
  const double df2 = static_cast<double>(y.size() - sums.size());
  const double f = (ssb / df1) / (ssw / df2);
  return {f, f_sf(f, df1, df2), ssb / (ssb + ssw)};
}

AncovaInput make_input(const std::vector<std::string>& g, const std::vector<double>& y,
                       const std::vector<std::vector<double>>& covs = {}, const std::vector<std::string>& names = {}) {
  AncovaInput in;
  in.groups = g;
  in.y = Eigen::Map<const Vector>(y.data(), static_cast<Eigen::Index>(y.size()));
  in.covariate_names = names;
  in.covariates.resize(static_cast<Eigen::Index>(y.size()), static_cast<Eigen::Index>(covs.size()));
  for (std::size_t c = 0; c < covs.size(); ++c) {
    for (std::size_t r = 0; r < y.size(); ++r) {
      in.covariates(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = covs[c][r];
    }
  }
  return in;
}

// statsmodels fixture: four groups of eight with one covariate.
const std::vector<std::string> kFixtureGroups = [] {
  std::vector<std::string> g;
  for (const char* lv : {"advice", "control", "quiz", "quiz_advice"}) {
    for (int i = 0; i < 8; ++i) g.emplace_back(lv);
  }
  return g;
}();
const std::vector<double> kFixtureX{3, 5, 2, 6, 4, 7, 5, 3, 4, 6, 2, 5, 3, 7, 6, 4,
                                    5, 3, 6, 2, 4, 7, 3, 5, 6, 4, 3, 7, 5, 2, 4, 6};
const std::vector<double> kFixtureY{5.07, 4.25, 5.28, 5.44, 5.22, 3.71, 7.0, 3.74, 2.46, 5.56, 3.8,
                                    3.75, 5.21, 5.19, 3.32, 4.88, 5.4,  2.38, 6.24, 4.52, 3.52, 6.21,
                                    3.52, 6.15, 5.66, 6.82, 3.29, 8.24, 6.0,  5.78, 4.4,  6.22};

}  // namespace

TEST_CASE("OLS matches the normal equations") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 6 + trial % 7;
    const int p = 1 + trial % 4;
    Matrix x(n, p);
    Vector y(n);
    for (int i = 0; i < n; ++i) {
      x(i, 0) = 1.0;
      for (int j = 1; j < p; ++j) x(i, j) = nd(rng);
      y[i] = nd(rng);
    }
    const auto fit = fit_ols(x, y);
    const auto oracle = normal_equations(to_rows(x), std::vector<double>(y.data(), y.data() + n));
    for (int j = 0; j < p; ++j) CHECK(std::abs(fit.coeffs[j] - oracle[static_cast<std::size_t>(j)]) < 1e-9);
    const Rows inv = invert(xtx(to_rows(x)));
    for (int i = 0; i < p; ++i) {
      for (int j = 0; j < p; ++j) {
        CHECK(std::abs(fit.xtx_inverse(i, j) - inv[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) < 1e-9);
      }
    }
    CHECK(std::abs(fit.hat_diagonal.sum() - p) < 1e-9);
  }
}

TEST_CASE("OLS guards") {
  Matrix x(3, 2);
  x << 1, 1, 1, 1, 1, 1;
  Vector y(3);
  y << 1, 2, 3;
  CHECK_THROWS_AS(fit_ols(x, y), Error);
  try {
    fit_ols(x, y);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RankDeficient);
  }
  Matrix small(2, 2);
  small << 1, 0, 1, 1;
  try {
    fit_ols(small, Vector::Ones(2));
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TooFewRows);
  }
}

TEST_CASE("HC3 fixtures") {
  SUBCASE("intercept only with alternating residuals") {
    const Matrix x = Matrix::Ones(4, 1);
    Vector e(4);
    e << 1, -1, 1, -1;
    const Vector h = Vector::Constant(4, 0.25);
    const Matrix v = hc3_covariance(x, e, h);
    CHECK(std::abs(v(0, 0) - 4.0 / 9.0) < 1e-12);
  }
  SUBCASE("zero residuals give a zero matrix") {
    Matrix x(5, 2);
    x << 1, 0.1, 1, 0.7, 1, 1.3, 1, 2.2, 1, 3.0;
    Vector y = 2.0 * x.col(1) + Vector::Ones(5);
    const auto fit = fit_ols(x, y);
    const Matrix v = hc3_covariance(x, Vector::Zero(5), fit.hat_diagonal);
    CHECK(v.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("random 12x3 matches the direct formula") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> nd;
    Matrix x(12, 3);
    Vector y(12);
    for (int i = 0; i < 12; ++i) {
      x(i, 0) = 1.0;
      x(i, 1) = nd(rng);
      x(i, 2) = nd(rng);
      y[i] = 0.5 + x(i, 1) - 2 * x(i, 2) + nd(rng) * (1 + std::abs(x(i, 1)));
    }
    const auto fit = fit_ols(x, y);
    const Matrix v = hc3_covariance(x, fit.residuals, fit.hat_diagonal);

    const Rows xr = to_rows(x);
    const Rows inv = invert(xtx(xr));
    std::vector<double> h(12, 0.0);
    for (std::size_t r = 0; r < 12; ++r) {
      for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) h[r] += xr[r][i] * inv[i][j] * xr[r][j];
      }
    }
    Rows meat(3, std::vector<double>(3, 0.0));
    for (std::size_t r = 0; r < 12; ++r) {
      const double e = fit.residuals[static_cast<Eigen::Index>(r)];
      const double w = e * e / std::pow(1 - h[r], 2);
      for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) meat[i][j] += w * xr[r][i] * xr[r][j];
      }
    }
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = 0; j < 3; ++j) {
        double o = 0;
        for (std::size_t a = 0; a < 3; ++a) {
          for (std::size_t b = 0; b < 3; ++b) o += inv[i][a] * meat[a][b] * inv[b][j];
        }
        CHECK(std::abs(v(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) - o) < 1e-9);
      }
    }
  }
}

TEST_CASE("Breusch-Pagan") {
  Matrix x(10, 2);
  for (int i = 0; i < 10; ++i) x.row(i) << 1.0, i;
  const auto zero = breusch_pagan(x, Vector::Zero(10));
  CHECK(zero.lm == 0.0);
  CHECK(zero.p_value == 1.0);

  std::mt19937_64 rng(8);
  std::normal_distribution<double> nd;
  Matrix xh(200, 2);
  Vector y(200);
  for (int i = 0; i < 200; ++i) {
    const double v = i / 20.0;
    xh.row(i) << 1.0, v;
    y[i] = 1.0 + v + nd(rng) * (0.2 + v);
  }
  const auto fit = fit_ols(xh, y);
  CHECK(breusch_pagan(xh, fit.residuals).p_value < 0.01);
}

TEST_CASE("ANCOVA without covariates equals one-way ANOVA") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<std::string> g;
    std::vector<double> y;
    const int per = 2 + trial % 2;
    for (const char* lv : {"a", "b", "c", "d"}) {
      for (int i = 0; i < per; ++i) {
        g.emplace_back(lv);
        y.push_back(nd(rng) + (lv[0] - 'a') * 0.4);
      }
    }
    const auto r = ancova(make_input(g, y));
    const auto o = oneway(g, y);
    CHECK(std::abs(r.factor_f - o.f) < 1e-9);
    CHECK(std::abs(r.factor_p - o.p) < 1e-6);
    CHECK(std::abs(r.partial_eta_sq - o.eta) < 1e-9);
    CHECK(r.factor_df1 == 3);
    CHECK(r.factor_df2 == static_cast<int>(y.size()) - 4);
  }
}

TEST_CASE("adjusted means equal raw means under a constant covariate") {
  const std::vector<std::string> g{"a", "a", "a", "b", "b", "b", "c", "c", "c"};
  const std::vector<double> y{1, 2, 4, 3, 5, 6, 7, 8, 8.5};
  const auto r = ancova(make_input(g, y, {std::vector<double>(9, 3.0)}, {"age"}));
  CHECK(std::abs(r.adjusted_means[0] - 7.0 / 3.0) < 1e-9);
  CHECK(std::abs(r.adjusted_means[1] - 14.0 / 3.0) < 1e-9);
  CHECK(std::abs(r.adjusted_means[2] - 23.5 / 3.0) < 1e-9);
  REQUIRE(r.covariate_tests.size() == 1);
  CHECK(r.covariate_tests[0].name == "age");
  CHECK(r.covariate_tests[0].coefficient == 0.0);
  CHECK(std::abs(r.factor_f - oneway(g, y).f) < 1e-9);
}

TEST_CASE("ANCOVA reproduces the statsmodels fixture") {
  const auto in = make_input(kFixtureGroups, kFixtureY, {kFixtureX}, {"x"});
  AncovaOptions classical;
  classical.hc3 = Hc3Mode::Off;
  const auto r = ancova(in, classical);
  CHECK(r.levels == std::vector<std::string>{"advice", "control", "quiz", "quiz_advice"});
  CHECK(r.reference_level == "advice");
  CHECK(std::abs(r.factor_f - 2.2269487274931947) < 1e-9);
  CHECK(std::abs(r.factor_p - 0.10795490471101947) < 1e-6);
  CHECK(std::abs(r.ss_residual - 38.96295241745283) < 1e-9);
  CHECK(std::abs(r.partial_eta_sq - 0.19835743277598794) < 1e-9);
  CHECK(std::abs(r.adjusted_means[0] - 5.004675707547175) < 1e-9);
  CHECK(std::abs(r.adjusted_means[1] - 4.230324292452829) < 1e-9);
  CHECK(std::abs(r.adjusted_means[2] - 4.783425707547191) < 1e-9);
  CHECK(std::abs(r.adjusted_means[3] - 5.760324292452828) < 1e-9);
  REQUIRE(r.covariate_tests.size() == 1);
  CHECK(std::abs(r.covariate_tests[0].coefficient - 0.32740566037735896) < 1e-9);
  CHECK(std::abs(r.covariate_tests[0].f - 5.905428309526861) < 1e-9);
  CHECK(std::abs(r.covariate_tests[0].p - 0.022019029494070263) < 1e-6);
  CHECK(std::abs(r.diagnostics.breusch_pagan_lm - 0.3837334677391837) < 1e-9);
  CHECK(std::abs(r.diagnostics.breusch_pagan_p - 0.9837868985268636) < 1e-6);
  CHECK_FALSE(r.diagnostics.used_hc3);
  CHECK(r.diagnostics.slopes_f.has_value());

  AncovaOptions robust;
  robust.hc3 = Hc3Mode::On;
  const auto h = ancova(in, robust);
  CHECK(h.diagnostics.used_hc3);
  REQUIRE(h.diagnostics.robust_factor_f.has_value());
  CHECK(std::abs(*h.diagnostics.robust_factor_f - 1.879325903516886) < 1e-9);
  CHECK(std::abs(*h.diagnostics.robust_factor_p - 0.15690490360918463) < 1e-6);
  CHECK(std::abs(h.factor_f - r.factor_f) < 1e-12);

  // Auto only switches to HC3 when Breusch-Pagan rejects.
  CHECK_FALSE(ancova(in).diagnostics.used_hc3);
}

TEST_CASE("factor test is invariant to affine dv changes and to the reference level") {
  const auto in = make_input(kFixtureGroups, kFixtureY, {kFixtureX}, {"x"});
  const auto base = ancova(in);
  auto scaled = in;
  scaled.y = 3.0 * in.y.array() + 7.0;
  const auto r = ancova(scaled);
  CHECK(std::abs(r.factor_f - base.factor_f) < 1e-9);
  CHECK(std::abs(r.factor_p - base.factor_p) < 1e-9);
  CHECK(std::abs(r.partial_eta_sq - base.partial_eta_sq) < 1e-9);
  for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(r.adjusted_means[i] - (3 * base.adjusted_means[i] + 7)) < 1e-9);

  for (const char* ref : {"control", "quiz", "quiz_advice"}) {
    AncovaOptions o;
    o.reference_level = ref;
    const auto rr = ancova(in, o);
    CHECK(rr.reference_level == ref);
    CHECK(std::abs(rr.factor_f - base.factor_f) < 1e-9);
    CHECK(std::abs(rr.partial_eta_sq - base.partial_eta_sq) < 1e-9);
    for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(rr.adjusted_means[i] - base.adjusted_means[i]) < 1e-9);
  }
}

TEST_CASE("factor guards") {
  CHECK_THROWS_AS(ancova(make_input({"a", "a", "a"}, {1, 2, 3})), Error);
  try {
    ancova(make_input({"a", "a", "b"}, {1, 2, 3}));
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateFactor);
  }
}

TEST_CASE("midranks") {
  CHECK(midranks({10, 20, 20, 5}) == std::vector<double>{2, 3.5, 3.5, 1});
  CHECK(midranks({1, 1, 1}) == std::vector<double>{2, 2, 2});
  CHECK(midranks({}).empty());
}

TEST_CASE("Iman-Conover is invariant under monotone transforms") {
  const auto in = make_input(kFixtureGroups, kFixtureY, {kFixtureX}, {"x"});
  const auto base = iman_conover_ancova(in);
  CHECK(base.rank_based);
  auto expd = in;
  expd.y = in.y.array().exp();
  auto cubed = in;
  cubed.y = in.y.array().cube() - 4.0;
  for (const auto* t : {&expd, &cubed}) {
    const auto r = iman_conover_ancova(*t);
    CHECK(std::abs(r.factor_f - base.factor_f) < 1e-9);
    CHECK(std::abs(r.factor_p - base.factor_p) < 1e-6);
    for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(r.adjusted_means[i] - base.adjusted_means[i]) < 1e-9);
  }

  // Data that already equals its ranks gives the parametric result.
  std::vector<double> ry, rx;
  for (int i = 0; i < 32; ++i) {
    ry.push_back((i * 7) % 32 + 1);
    rx.push_back((i * 13) % 32 + 1);
  }
  const auto ranked = make_input(kFixtureGroups, ry, {rx}, {"x"});
  const auto a = ancova(ranked);
  const auto b = iman_conover_ancova(ranked);
  CHECK(a.factor_f == doctest::Approx(b.factor_f).epsilon(1e-12));
  CHECK(a.factor_p == doctest::Approx(b.factor_p).epsilon(1e-12));

  AncovaOptions dv_only;
  dv_only.rank_scope = RankScope::DvOnly;
  const auto d = iman_conover_ancova(in, dv_only);
  CHECK(d.covariate_tests[0].coefficient != doctest::Approx(base.covariate_tests[0].coefficient));
}

TEST_CASE("Holm adjustment") {
  const auto adj = holm_adjust({0.01, 0.04, 0.03});
  CHECK(std::abs(adj[0] - 0.03) < 1e-12);
  CHECK(std::abs(adj[1] - 0.06) < 1e-12);
  CHECK(std::abs(adj[2] - 0.06) < 1e-12);
  CHECK(holm_adjust({0.2}) == std::vector<double>{0.2});
  CHECK(holm_adjust({}).empty());
  CHECK(holm_adjust({0.5, 0.9}) == std::vector<double>{1.0, 1.0});

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> p(1 + trial % 7);
    for (auto& v : p) v = u(rng) * u(rng);
    const auto a = holm_adjust(p);
    for (std::size_t i = 0; i < p.size(); ++i) {
      CHECK(a[i] >= p[i]);
      CHECK(a[i] <= 1.0);
    }
    // Order-equivariant: permuting inputs permutes outputs.
    std::vector<std::size_t> order(p.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<double> q;
    for (auto i : order) q.push_back(p[i]);
    const auto b = holm_adjust(q);
    for (std::size_t i = 0; i < order.size(); ++i) CHECK(b[i] == a[order[i]]);
  }
  try {
    holm_adjust({0.5, 1.5});
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::OutOfRangeP);
  }
}

TEST_CASE("post-hoc contrasts") {
  const std::vector<std::string> g{"a", "a", "a", "b", "b", "b"};
  const std::vector<double> y{1, 2, 3, 1, 2, 3};
  const auto same = posthoc_pairwise(make_input(g, y));
  REQUIRE(same.pairs.size() == 1);
  CHECK(std::abs(same.pairs[0].mean_diff) < 1e-12);
  CHECK(same.pairs[0].p_raw == doctest::Approx(1.0));

  const auto in = make_input(kFixtureGroups, kFixtureY, {kFixtureX}, {"x"});
  const auto r = ancova(in);
  const auto ph = posthoc_pairwise(in);
  REQUIRE(ph.pairs.size() == 6);
  std::size_t i = 0;
  for (std::size_t a = 0; a < 4; ++a) {
    for (std::size_t b = a + 1; b < 4; ++b, ++i) {
      CHECK(ph.pairs[i].level_a == r.levels[a]);
      CHECK(std::abs(ph.pairs[i].mean_diff - (r.adjusted_means[a] - r.adjusted_means[b])) < 1e-9);
      CHECK(ph.pairs[i].p_holm >= ph.pairs[i].p_raw);
    }
  }
}
