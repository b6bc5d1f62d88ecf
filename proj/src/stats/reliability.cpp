#include "scamsim/stats/reliability.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "scamsim/error.hpp"

namespace scamsim::stats {

double jaccard_distance(const LabelSet& a, const LabelSet& b) {
  if (a.empty() && b.empty()) return 0.0;
  std::size_t inter = 0;
  for (const auto& x : a) inter += b.count(x);
  const std::size_t uni = a.size() + b.size() - inter;
  return 1.0 - static_cast<double>(inter) / static_cast<double>(uni);
}

AlphaResult krippendorff_alpha(const std::vector<AdviceLabel>& labels, const SetDistance& distance) {
  std::map<std::string, std::vector<const LabelSet*>> units;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& l : labels) {
    if (!seen.insert({l.unit_id, l.coder_id}).second) {
      fail(ErrorCode::InvalidArgument, "coder " + l.coder_id + " labelled unit " + l.unit_id + " twice");
    }
    units[l.unit_id].push_back(&l.labels);
  }

  AlphaResult r;
  std::vector<const LabelSet*> pooled;
  double observed = 0.0;
  for (const auto& [id, values] : units) {
    const std::size_t m = values.size();
    if (m < 2) continue;
    ++r.units;
    double within = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        if (i != j) within += distance(*values[i], *values[j]);
      }
    }
    observed += within / static_cast<double>(m - 1);
    pooled.insert(pooled.end(), values.begin(), values.end());
  }
  if (r.units == 0) fail(ErrorCode::NoOverlap, "no unit was coded by two or more coders");

  const std::size_t n = pooled.size();
  r.pairable_values = n;
  r.observed_disagreement = observed / static_cast<double>(n);
  double expected = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) expected += distance(*pooled[i], *pooled[j]);
    }
  }
  r.expected_disagreement = expected / (static_cast<double>(n) * static_cast<double>(n - 1));
  r.alpha = r.expected_disagreement > 0 ? 1.0 - r.observed_disagreement / r.expected_disagreement : 1.0;
  return r;
}

const CodebookCode* Codebook::find(const std::string& code_id) const {
  for (const auto& c : codes) {
    if (c.id == code_id) return &c;
  }
  return nullptr;
}

namespace {

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return Json::parse(ss.str());
  } catch (const Json::exception& ex) {
    fail(ErrorCode::ParseError, path.string() + ": " + ex.what());
  }
}

}  // namespace

Codebook codebook_from_json(const Json& j) {
  Codebook cb;
  try {
    for (const auto& theme : j.at("themes")) {
      const auto tid = theme.at("id").get<std::string>();
      cb.themes[tid] = theme.at("name").get<std::string>();
      for (const auto& cat : theme.value("categories", Json::array())) {
        for (const auto& code : cat.at("codes")) {
          cb.codes.push_back(CodebookCode{code.at("id").get<std::string>(), tid, cat.at("name").get<std::string>(),
                                          code.at("name").get<std::string>(),
                                          code.value("definition", std::string{})});
        }
      }
      for (const auto& code : theme.value("codes", Json::array())) {
        cb.codes.push_back(CodebookCode{code.at("id").get<std::string>(), tid, "", code.at("name").get<std::string>(),
                                        code.value("definition", std::string{})});
      }
    }
  } catch (const Json::exception& ex) {
    fail(ErrorCode::ParseError, std::string("codebook: ") + ex.what());
  }
  std::set<std::string> ids;
  for (const auto& c : cb.codes) {
    if (!ids.insert(c.id).second) fail(ErrorCode::ParseError, "codebook: duplicate code id " + c.id);
  }
  return cb;
}

Codebook load_codebook(const std::filesystem::path& path) { return codebook_from_json(read_json(path)); }

void check_labels(const std::vector<AdviceLabel>& labels, const Codebook& codebook) {
  for (const auto& l : labels) {
    if (l.labels.empty()) {
      fail(ErrorCode::InvalidArgument, "unit " + l.unit_id + " coder " + l.coder_id + ": empty label set");
    }
    for (const auto& code : l.labels) {
      if (!codebook.find(code)) {
        fail(ErrorCode::InvalidArgument, "unit " + l.unit_id + " coder " + l.coder_id + ": unknown code " + code);
      }
    }
  }
}

std::vector<AdviceLabel> labels_from_json(const Json& j) {
  std::vector<AdviceLabel> out;
  try {
    for (const auto& l : j.at("labels")) {
      const auto codes = l.at("labels").get<std::vector<std::string>>();
      out.push_back(AdviceLabel{l.at("unit_id").get<std::string>(), l.at("coder_id").get<std::string>(),
                                LabelSet(codes.begin(), codes.end())});
    }
  } catch (const Json::exception& ex) {
    fail(ErrorCode::ParseError, std::string("label file: ") + ex.what());
  }
  return out;
}

std::vector<AdviceLabel> read_labels(const std::filesystem::path& path) { return labels_from_json(read_json(path)); }

FrequencyTable label_frequencies(const std::vector<AdviceLabel>& labels, const Codebook& codebook) {
  std::map<std::string, LabelSet> per_unit;
  for (const auto& l : labels) per_unit[l.unit_id].insert(l.labels.begin(), l.labels.end());

  FrequencyTable t;
  t.units = per_unit.size();
  auto pct = [&](std::size_t k) { return t.units ? 100.0 * static_cast<double>(k) / static_cast<double>(t.units) : 0.0; };
  for (const auto& [tid, name] : codebook.themes) {
    std::size_t k = 0;
    for (const auto& [unit, codes] : per_unit) {
      k += std::any_of(codes.begin(), codes.end(), [&](const std::string& c) {
        const auto* code = codebook.find(c);
        return code && code->theme_id == tid;
      });
    }
    t.themes.push_back(FrequencyRow{tid, name, k, pct(k)});
  }
  for (const auto& code : codebook.codes) {
    std::size_t k = 0;
    for (const auto& [unit, codes] : per_unit) k += codes.count(code.id);
    t.codes.push_back(FrequencyRow{code.id, code.name, k, pct(k)});
  }
  return t;
}

Json to_json(const AlphaResult& a) {
  return Json{{"alpha", a.alpha},
              {"observed_disagreement", a.observed_disagreement},
              {"expected_disagreement", a.expected_disagreement},
              {"pairable_values", a.pairable_values},
              {"units", a.units}};
}

Json to_json(const FrequencyTable& t) {
  auto rows = [](const std::vector<FrequencyRow>& v) {
    Json out = Json::array();
    for (const auto& r : v) out.push_back(Json{{"id", r.id}, {"name", r.name}, {"units", r.units}, {"percent", r.percent}});
    return out;
  };
  return Json{{"units", t.units}, {"themes", rows(t.themes)}, {"codes", rows(t.codes)}};
}

}  // namespace scamsim::stats
