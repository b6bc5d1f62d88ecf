#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scamsim/json.hpp"

namespace scamsim::stats {

struct MannWhitney {
  double u_a = 0.0;  // Σ [a > b] + ½[a = b]
  double u_b = 0.0;
  double p_two_sided = 1.0;
  double p_one_sided = 1.0;  // alternative: a tends to exceed b
  bool exact = false;
  double z = 0.0;  // normal approximation only
  double rank_biserial_r = 0.0;
  double cohen_d_pooled = 0.0;
  double cohen_d_average = 0.0;
};

/// Exact null distribution when n_a·n_b ≤ 400, otherwise the tie-corrected
/// normal approximation with continuity correction.
MannWhitney mann_whitney_u(const std::vector<double>& a, const std::vector<double>& b);

/// Pooled-SD and average-SD standardized mean differences (a − b).
double cohen_d_pooled(const std::vector<double>& a, const std::vector<double>& b);
double cohen_d_average(const std::vector<double>& a, const std::vector<double>& b);

struct ChiSquare {
  double chi2 = 0.0;
  int df = 0;
  double p = 1.0;
  double cramers_v = 0.0;
};

ChiSquare chi_square_independence(const std::vector<std::vector<double>>& contingency);

struct Summary {
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;  // sample (n − 1)
  double median = 0.0;
};

Summary summarize(const std::vector<double>& values);

struct WordLengthReport {
  std::map<std::string, Summary> groups;
  std::vector<std::string> compared;  // the two groups tested, in order
  std::optional<MannWhitney> test;
};

/// Whitespace word counts per group; the U test runs when exactly two groups exist
/// (or between `first` and `second` when given).
WordLengthReport word_length_stats(const std::vector<std::string>& texts, const std::vector<std::string>& groups,
                                   const std::string& first = {}, const std::string& second = {});

Json to_json(const MannWhitney& m);
Json to_json(const ChiSquare& c);
Json to_json(const Summary& s);
Json to_json(const WordLengthReport& r);

}  // namespace scamsim::stats
