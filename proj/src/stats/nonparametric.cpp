#include "scamsim/stats/nonparametric.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "scamsim/error.hpp"
#include "scamsim/stats/ancova.hpp"
#include "scamsim/stats/distributions.hpp"
#include "scamsim/text.hpp"

namespace scamsim::stats {

namespace {

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double var_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

// Null distribution of the doubled rank sum of a size-k subset of `ranks2`
// (doubled midranks, so ties stay integral). counts[s] = number of subsets.
std::vector<double> subset_sum_counts(const std::vector<long>& ranks2, std::size_t k) {
  long total = 0;
  for (long r : ranks2) total += r;
  // dp[j][s]: subsets of size j with sum s.
  std::vector<std::vector<double>> dp(k + 1, std::vector<double>(static_cast<std::size_t>(total) + 1, 0.0));
  dp[0][0] = 1.0;
  for (long r : ranks2) {
    for (std::size_t j = k; j >= 1; --j) {
      for (long s = total; s >= r; --s) dp[j][static_cast<std::size_t>(s)] += dp[j - 1][static_cast<std::size_t>(s - r)];
    }
  }
  return dp[k];
}

}  // namespace

double cohen_d_pooled(const std::vector<double>& a, const std::vector<double>& b) {
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  if (na + nb <= 2) return 0.0;
  const double pooled = ((na - 1) * var_of(a) + (nb - 1) * var_of(b)) / (na + nb - 2);
  return pooled > 0 ? (mean_of(a) - mean_of(b)) / std::sqrt(pooled) : 0.0;
}

double cohen_d_average(const std::vector<double>& a, const std::vector<double>& b) {
  const double avg = 0.5 * (var_of(a) + var_of(b));
  return avg > 0 ? (mean_of(a) - mean_of(b)) / std::sqrt(avg) : 0.0;
}

MannWhitney mann_whitney_u(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) fail(ErrorCode::EmptySample, "Mann-Whitney U needs two non-empty samples");
  const std::size_t na = a.size();
  const std::size_t nb = b.size();
  const double nab = static_cast<double>(na * nb);

  MannWhitney m;
  for (double x : a) {
    for (double y : b) {
      if (x > y) m.u_a += 1.0;
      if (x == y) m.u_a += 0.5;
    }
  }
  m.u_b = nab - m.u_a;
  m.rank_biserial_r = std::fabs(1.0 - 2.0 * m.u_a / nab);
  m.cohen_d_pooled = cohen_d_pooled(a, b);
  m.cohen_d_average = cohen_d_average(a, b);

  std::vector<double> pooled(a);
  pooled.insert(pooled.end(), b.begin(), b.end());
  const auto ranks = midranks(pooled);
  const std::size_t n = pooled.size();
  const double mean_u = nab / 2.0;

  if (na * nb <= 400) {
    m.exact = true;
    std::vector<long> ranks2;
    for (double r : ranks) ranks2.push_back(std::lround(2.0 * r));
    const auto counts = subset_sum_counts(ranks2, na);
    double total = 0.0;
    for (double c : counts) total += c;
    // U_a = R_a − n_a(n_a+1)/2, so doubled: 2U = R2 − n_a(n_a+1).
    const long offset = static_cast<long>(na * (na + 1));
    const long obs2 = std::lround(2.0 * m.u_a);
    double le = 0.0, ge = 0.0;
    for (std::size_t s = 0; s < counts.size(); ++s) {
      if (counts[s] == 0.0) continue;
      const long u2 = static_cast<long>(s) - offset;
      if (u2 <= obs2) le += counts[s];
      if (u2 >= obs2) ge += counts[s];
    }
    m.p_one_sided = ge / total;
    m.p_two_sided = std::min(1.0, 2.0 * std::min(le, ge) / total);
    return m;
  }

  std::map<double, int> ties;
  for (double r : ranks) ++ties[r];
  double tie_sum = 0.0;
  for (const auto& [r, t] : ties) tie_sum += static_cast<double>(t) * t * t - t;
  const double nn = static_cast<double>(n);
  const double var = nab / 12.0 * ((nn + 1.0) - tie_sum / (nn * (nn - 1.0)));
  if (var <= 0.0) {
    m.p_one_sided = m.u_a >= mean_u ? 1.0 : 0.0;
    m.p_two_sided = 1.0;
    return m;
  }
  const double sd = std::sqrt(var);
  const double diff = m.u_a - mean_u;
  m.z = (std::fabs(diff) - 0.5) / sd;
  if (m.z < 0) m.z = 0.0;
  m.z = std::copysign(m.z, diff);
  m.p_two_sided = std::min(1.0, 2.0 * normal_sf(std::fabs(m.z)));
  m.p_one_sided = normal_sf((diff - 0.5) / sd);
  return m;
}

ChiSquare chi_square_independence(const std::vector<std::vector<double>>& t) {
  if (t.size() < 2 || t.front().size() < 2) fail(ErrorCode::InvalidArgument, "contingency table must be at least 2x2");
  const std::size_t r = t.size();
  const std::size_t c = t.front().size();
  std::vector<double> rows(r, 0.0), cols(c, 0.0);
  double n = 0.0;
  for (std::size_t i = 0; i < r; ++i) {
    if (t[i].size() != c) fail(ErrorCode::InvalidArgument, "contingency table rows differ in length");
    for (std::size_t j = 0; j < c; ++j) {
      if (t[i][j] < 0) fail(ErrorCode::InvalidArgument, "negative count");
      rows[i] += t[i][j];
      cols[j] += t[i][j];
      n += t[i][j];
    }
  }
  for (double m : rows) {
    if (m <= 0) fail(ErrorCode::ZeroMargin, "a row total is zero");
  }
  for (double m : cols) {
    if (m <= 0) fail(ErrorCode::ZeroMargin, "a column total is zero");
  }
  ChiSquare out;
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      const double e = rows[i] * cols[j] / n;
      out.chi2 += (t[i][j] - e) * (t[i][j] - e) / e;
    }
  }
  out.df = static_cast<int>((r - 1) * (c - 1));
  out.p = chi2_sf(out.chi2, out.df);
  out.cramers_v = std::sqrt(out.chi2 / (n * static_cast<double>(std::min(r - 1, c - 1))));
  return out;
}

Summary summarize(const std::vector<double>& values) {
  Summary s;
  s.n = values.size();
  if (values.empty()) return s;
  s.mean = mean_of(values);
  s.sd = std::sqrt(var_of(values));
  std::vector<double> sorted(values);
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  s.median = sorted.size() % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  return s;
}

WordLengthReport word_length_stats(const std::vector<std::string>& texts, const std::vector<std::string>& groups,
                                   const std::string& first, const std::string& second) {
  if (texts.size() != groups.size()) fail(ErrorCode::InvalidArgument, "texts and group labels differ in length");
  std::map<std::string, std::vector<double>> by_group;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    by_group[groups[i]].push_back(static_cast<double>(word_count(texts[i])));
  }
  WordLengthReport r;
  for (const auto& [g, v] : by_group) r.groups[g] = summarize(v);
  std::string ga = first, gb = second;
  if (ga.empty() && gb.empty() && by_group.size() == 2) {
    ga = by_group.begin()->first;
    gb = std::next(by_group.begin())->first;
  }
  if (!ga.empty() && !gb.empty() && by_group.count(ga) && by_group.count(gb)) {
    r.compared = {ga, gb};
    r.test = mann_whitney_u(by_group[ga], by_group[gb]);
  }
  return r;
}

Json to_json(const MannWhitney& m) {
  return Json{{"U_a", m.u_a},
              {"U_b", m.u_b},
              {"p_two_sided", m.p_two_sided},
              {"p_one_sided", m.p_one_sided},
              {"exact", m.exact},
              {"z", m.z},
              {"rank_biserial_r", m.rank_biserial_r},
              {"cohen_d_pooled_sd", m.cohen_d_pooled},
              {"cohen_d_average_sd", m.cohen_d_average}};
}

Json to_json(const ChiSquare& c) {
  return Json{{"chi2", c.chi2}, {"df", c.df}, {"p", c.p}, {"cramers_v", c.cramers_v}};
}

Json to_json(const Summary& s) {
  return Json{{"n", s.n}, {"mean", s.mean}, {"sd", s.sd}, {"median", s.median}};
}

Json to_json(const WordLengthReport& r) {
  Json groups = Json::object();
  for (const auto& [g, s] : r.groups) groups[g] = to_json(s);
  Json out{{"groups", groups}};
  if (r.test) {
    out["compared"] = r.compared;
    out["mann_whitney"] = to_json(*r.test);
  }
  return out;
}

}  // namespace scamsim::stats
