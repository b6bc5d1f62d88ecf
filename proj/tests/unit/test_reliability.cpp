#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "scamsim/error.hpp"
#include "scamsim/stats/reliability.hpp"

using namespace scamsim;
using namespace scamsim::stats;

namespace {

// Coincidence-matrix form of α over distinct label sets.
double coincidence_alpha(const std::vector<AdviceLabel>& labels) {
  std::map<std::string, std::vector<LabelSet>> units;
  for (const auto& l : labels) units[l.unit_id].push_back(l.labels);
  std::map<std::pair<LabelSet, LabelSet>, double> o;
  std::map<LabelSet, double> nc;
  double n = 0;
  for (const auto& [id, v] : units) {
    if (v.size() < 2) continue;
    for (std::size_t i = 0; i < v.size(); ++i) {
      for (std::size_t j = 0; j < v.size(); ++j) {
        if (i != j) o[{v[i], v[j]}] += 1.0 / static_cast<double>(v.size() - 1);
      }
      nc[v[i]] += 1;
      n += 1;
    }
  }
  double num = 0, den = 0;
  for (const auto& [ck, w] : o) num += w * jaccard_distance(ck.first, ck.second);
  for (const auto& [c, a] : nc) {
    for (const auto& [k, b] : nc) den += a * b * jaccard_distance(c, k);
  }
  return 1.0 - (n - 1) * num / den;
}

}  // namespace

TEST_CASE("Jaccard distance") {
  CHECK(std::abs(jaccard_distance({"A", "B"}, {"B", "C"}) - 2.0 / 3.0) < 1e-12);
  CHECK(jaccard_distance({"A"}, {"A"}) == 0.0);
  CHECK(jaccard_distance({"A"}, {"B"}) == 1.0);
  CHECK(jaccard_distance({}, {}) == 0.0);
  CHECK(jaccard_distance({}, {"A"}) == 1.0);
}

TEST_CASE("Krippendorff alpha") {
  SUBCASE("perfect agreement") {
    std::vector<AdviceLabel> l{{"u1", "c1", {"A"}}, {"u1", "c2", {"A"}}, {"u2", "c1", {"B", "C"}},
                               {"u2", "c2", {"B", "C"}}, {"u3", "c1", {"A"}}, {"u3", "c2", {"A"}}};
    CHECK(krippendorff_alpha(l).alpha == 1.0);
  }
  SUBCASE("identical values everywhere") {
    std::vector<AdviceLabel> l{{"u1", "c1", {"A"}}, {"u1", "c2", {"A"}}, {"u2", "c1", {"A"}}, {"u2", "c2", {"A"}}};
    CHECK(krippendorff_alpha(l).alpha == 1.0);
  }
  SUBCASE("four units, two coders, one disagreement") {
    std::vector<AdviceLabel> l{{"u1", "c1", {"A"}}, {"u1", "c2", {"A"}}, {"u2", "c1", {"B"}}, {"u2", "c2", {"B"}},
                               {"u3", "c1", {"A"}}, {"u3", "c2", {"A"}}, {"u4", "c1", {"A"}}, {"u4", "c2", {"B"}}};
    const auto r = krippendorff_alpha(l);
    // 5 A and 3 B pooled: α = 1 − 7·2 / (2·5·3) = 8/15.
    CHECK(std::abs(r.alpha - 8.0 / 15.0) < 1e-12);
    CHECK(std::abs(r.alpha - coincidence_alpha(l)) < 1e-12);
    CHECK(r.units == 4);
    CHECK(r.pairable_values == 8);
  }
  SUBCASE("random set labels match the coincidence oracle") {
    std::mt19937_64 rng(9);
    const std::vector<std::string> pool{"A", "B", "C", "D"};
    for (int trial = 0; trial < 30; ++trial) {
      std::vector<AdviceLabel> l;
      for (int u = 0; u < 6; ++u) {
        const int coders = 1 + static_cast<int>(rng() % 3);
        for (int c = 0; c < coders; ++c) {
          LabelSet s;
          for (const auto& p : pool) {
            if (rng() % 3 == 0) s.insert(p);
          }
          if (s.empty()) s.insert(pool[rng() % 4]);
          l.push_back({"u" + std::to_string(u), "c" + std::to_string(c), s});
        }
      }
      l.push_back({"u9", "c0", {"A"}});
      l.push_back({"u9", "c1", {"B"}});
      const auto r = krippendorff_alpha(l);
      CHECK(std::abs(r.alpha - coincidence_alpha(l)) < 1e-9);
    }
  }
  SUBCASE("no overlap") {
    std::vector<AdviceLabel> l{{"u1", "c1", {"A"}}, {"u2", "c2", {"A"}}};
    try {
      krippendorff_alpha(l);
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NoOverlap);
    }
  }
  SUBCASE("a coder labelling a unit twice is rejected") {
    std::vector<AdviceLabel> l{{"u1", "c1", {"A"}}, {"u1", "c1", {"B"}}};
    CHECK_THROWS_AS(krippendorff_alpha(l), Error);
  }
}

TEST_CASE("codebook and label checks") {
  const auto cb = load_codebook(std::string(SCAMSIM_DATA_DIR) + "/codebook.json");
  CHECK(cb.codes.size() == 18);
  CHECK(cb.themes.size() == 5);
  REQUIRE(!cb.codes.empty());
  const auto first = cb.codes.front().id;
  CHECK(cb.find(first) != nullptr);
  CHECK(cb.find("nope") == nullptr);

  CHECK_NOTHROW(check_labels({{"u1", "c1", {first}}}, cb));
  CHECK_THROWS_AS(check_labels({{"u1", "c1", {}}}, cb), Error);
  CHECK_THROWS_AS(check_labels({{"u1", "c1", {"nope"}}}, cb), Error);

  const auto labels = labels_from_json(Json::parse(R"({"labels":[{"unit_id":"u1","coder_id":"c1","labels":["x","y"]}]})"));
  REQUIRE(labels.size() == 1);
  CHECK(labels[0].labels == LabelSet{"x", "y"});
  try {
    labels_from_json(Json::parse(R"({"labels":[{"unit_id":"u1"}]})"));
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
  }

  const auto t = label_frequencies({{"u1", "c1", {first}}, {"u1", "c2", {first}}, {"u2", "c1", {cb.codes.back().id}}}, cb);
  CHECK(t.units == 2);
  CHECK(t.codes.front().units == 1);
  CHECK(t.codes.front().percent == 50.0);
}
