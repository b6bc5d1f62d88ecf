#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "scamsim/json.hpp"

namespace scamsim::stats {

using LabelSet = std::set<std::string>;

/// 1 − |A ∩ B| / |A ∪ B|; two empty sets are at distance 0.
double jaccard_distance(const LabelSet& a, const LabelSet& b);

using SetDistance = std::function<double(const LabelSet&, const LabelSet&)>;

/// One coder's labels for one advice text.
struct AdviceLabel {
  std::string unit_id;
  std::string coder_id;
  LabelSet labels;
};

struct AlphaResult {
  double alpha = 1.0;
  double observed_disagreement = 0.0;
  double expected_disagreement = 0.0;
  std::size_t pairable_values = 0;
  std::size_t units = 0;
};

/// Krippendorff's α over pairable values (units coded at least twice). Expected
/// disagreement averages the distance over all pairs of pooled values; when it
/// is zero every value is identical and α is 1.
AlphaResult krippendorff_alpha(const std::vector<AdviceLabel>& labels, const SetDistance& distance = jaccard_distance);

struct CodebookCode {
  std::string id;
  std::string theme_id;
  std::string category;
  std::string name;
  std::string definition;
};

struct Codebook {
  std::map<std::string, std::string> themes;  // theme id → name
  std::vector<CodebookCode> codes;

  const CodebookCode* find(const std::string& code_id) const;
};

Codebook load_codebook(const std::filesystem::path& path);
Codebook codebook_from_json(const Json& j);

/// Rejects empty sets and codes missing from the codebook.
void check_labels(const std::vector<AdviceLabel>& labels, const Codebook& codebook);

/// Label file: {"labels":[{"unit_id","coder_id","labels":[...]}]}.
std::vector<AdviceLabel> labels_from_json(const Json& j);
std::vector<AdviceLabel> read_labels(const std::filesystem::path& path);

struct FrequencyRow {
  std::string id;
  std::string name;
  std::size_t units = 0;  // units where any coder applied it
  double percent = 0.0;   // of all units
};

struct FrequencyTable {
  std::size_t units = 0;
  std::vector<FrequencyRow> themes;
  std::vector<FrequencyRow> codes;
};

FrequencyTable label_frequencies(const std::vector<AdviceLabel>& labels, const Codebook& codebook);

Json to_json(const AlphaResult& a);
Json to_json(const FrequencyTable& t);

}  // namespace scamsim::stats
