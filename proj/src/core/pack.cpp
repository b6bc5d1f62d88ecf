#include "scamsim/pack.hpp"

#include <algorithm>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "scamsim/error.hpp"
#include "scamsim/text.hpp"

namespace scamsim {

namespace fs = std::filesystem;

const PromptTemplate* PromptPack::find_template(AgentRole role, Phase phase) const {
  for (const auto& t : templates) {
    if (t.role == role && t.phase == phase) return &t;
  }
  return nullptr;
}

std::string PromptPack::label_for(Speaker s) const {
  const auto it = speaker_labels.find(std::string(to_string(s)));
  if (it != speaker_labels.end()) return it->second;
  switch (s) {
    case Speaker::Scammer: return "Scammer";
    case Speaker::Target: return "Target";
    case Speaker::StaticA: return "Speaker A";
    case Speaker::StaticB: return "Speaker B";
  }
  return "Speaker";
}

std::int64_t PromptPack::tutorial_min_dwell_ms() const {
  std::int64_t total = 0;
  for (const auto& v : tutorial_videos) total += v.duration_ms;
  return total;
}

std::optional<std::string> PromptPack::fallback_for(AgentRole role, Phase phase,
                                                    std::optional<Slot> slot) const {
  std::string key = std::string(to_string(role)) + "/" + std::to_string(phase_index(phase));
  if (slot) key += "/" + std::string(to_string(*slot));
  const auto it = fallbacks.find(key);
  if (it == fallbacks.end()) return std::nullopt;
  return it->second;
}

namespace {

Json read_json_file(const fs::path& path) {
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

// Runs `fn`, turning any failure into a load finding so validation can report it.
template <typename Fn>
void collecting(PromptPack& pack, const std::string& what, Fn&& fn) {
  try {
    fn();
  } catch (const std::exception& ex) {
    pack.load_findings.push_back(what + ": " + ex.what());
  }
}

Condition static_condition(const std::string& key) {
  const Condition c = condition_from_string(key);
  if (c != Condition::Control && c != Condition::Quiz) {
    fail(ErrorCode::PackInvalid, "static content is only defined for control and quiz, not " + key);
  }
  return c;
}

}  // namespace

PromptPack load_pack(const fs::path& dir) {
  PromptPack pack;
  pack.root = dir;
  const Json manifest = read_json_file(dir / "manifest.json");
  if (!manifest.is_object()) fail(ErrorCode::ParseError, "manifest.json must be an object");
  pack.name = manifest.value("name", std::string{});
  pack.version = manifest.value("version", std::string{});

  collecting(pack, "templates", [&] {
    for (const auto& rel : manifest.at("templates")) {
      const auto path = rel.get<std::string>();
      collecting(pack, path, [&] { pack.templates.push_back(template_from_json(read_json_file(dir / path))); });
    }
  });

  collecting(pack, "static_transcripts", [&] {
    for (auto it = manifest.at("static_transcripts").begin(); it != manifest.at("static_transcripts").end(); ++it) {
      collecting(pack, "static transcript " + it.key(), [&] {
        const Condition c = static_condition(it.key());
        const Json doc = read_json_file(dir / it.value().get<std::string>());
        std::vector<StaticTurn> turns;
        for (const auto& t : doc.at("turns")) {
          turns.push_back(StaticTurn{speaker_from_string(t.at("speaker").get<std::string>()),
                                     phase_from_index(t.at("phase").get<int>()),
                                     slot_from_string(t.at("slot").get<std::string>()),
                                     t.at("text").get<std::string>()});
        }
        pack.static_transcripts[c] = std::move(turns);
      });
    }
  });

  collecting(pack, "static_summaries", [&] {
    for (auto it = manifest.at("static_summaries").begin(); it != manifest.at("static_summaries").end(); ++it) {
      collecting(pack, "static summaries " + it.key(), [&] {
        const Condition c = static_condition(it.key());
        const Json doc = read_json_file(dir / it.value().get<std::string>());
        std::vector<StaticSummary> out(3);
        std::set<int> seen;
        for (const auto& s : doc.at("summaries")) {
          const int p = phase_index(phase_from_index(s.at("phase").get<int>()));
          if (!seen.insert(p).second) fail(ErrorCode::PackInvalid, "duplicate summary for phase " + std::to_string(p));
          out[static_cast<std::size_t>(p - 1)] = StaticSummary{s.at("narrative").get<std::string>(),
                                                               s.value("next_phase_preview", std::string{})};
        }
        if (seen.size() != 3) fail(ErrorCode::PackInvalid, "expected one summary per phase");
        pack.static_summaries[c] = std::move(out);
      });
    }
  });

  collecting(pack, "quiz_bank", [&] {
    const Json doc = read_json_file(dir / manifest.at("quiz_bank").get<std::string>());
    for (const auto& item : doc.at("items")) pack.quiz_bank.push_back(quiz_item_from_json(item));
  });

  collecting(pack, "instruments", [&] {
    const Json doc = read_json_file(dir / manifest.at("instruments").get<std::string>());
    for (const auto& inst : doc.at("instruments")) pack.instruments.push_back(instrument_from_json(inst));
  });

  collecting(pack, "refusal", [&] {
    const Json& r = manifest.at("refusal");
    pack.refusal_patterns = r.at("patterns").get<std::vector<std::string>>();
    pack.refusal_retries = r.value("retries", 1);
  });

  if (manifest.contains("fallbacks")) {
    collecting(pack, "fallbacks", [&] {
      pack.fallbacks = read_json_file(dir / manifest.at("fallbacks").get<std::string>())
                           .get<std::map<std::string, std::string>>();
    });
  }

  collecting(pack, "tutorial", [&] {
    for (const auto& v : manifest.at("tutorial").at("videos")) {
      pack.tutorial_videos.push_back(TutorialVideo{v.at("id").get<std::string>(), v.value("title", std::string{}),
                                                   v.at("url").get<std::string>(),
                                                   v.at("duration_ms").get<std::int64_t>()});
    }
  });

  collecting(pack, "advice", [&] {
    const Json& a = manifest.at("advice");
    pack.advice_guidance = a.at("guidance").get<std::string>();
    pack.advice_framing = a.at("framing").get<std::string>();
  });
  pack.feedback_reask = manifest.value(
      "feedback_reask",
      std::string("Your previous reply did not follow the required format. Begin with a line "
                  "'VERDICT: HELPFUL' or 'VERDICT: UNHELPFUL'."));
  if (manifest.contains("speaker_labels")) {
    collecting(pack, "speaker_labels", [&] {
      pack.speaker_labels = manifest.at("speaker_labels").get<std::map<std::string, std::string>>();
    });
  }
  if (manifest.contains("bindings")) {
    collecting(pack, "bindings", [&] { pack.bindings = manifest.at("bindings").get<Bindings>(); });
  }
  if (manifest.contains("canned_advice")) {
    collecting(pack, "canned_advice", [&] {
      const Json doc = read_json_file(dir / manifest.at("canned_advice").get<std::string>());
      for (const auto& c : doc.at("strategies")) {
        pack.canned_advice.push_back(CannedAdvice{c.at("theme_id").get<std::string>(), c.value("label", std::string{}),
                                                  c.at("advice").get<std::vector<std::string>>()});
      }
    });
  }
  if (manifest.contains("scripted_fixtures")) {
    collecting(pack, "scripted_fixtures", [&] {
      pack.scripted_fixtures = read_json_file(dir / manifest.at("scripted_fixtures").get<std::string>());
    });
  }
  return pack;
}

namespace {

void check_static_transcript(const PromptPack& pack, Condition c, std::vector<std::string>& findings) {
  const std::string tag = "static transcript " + std::string(to_string(c)) + ": ";
  const auto it = pack.static_transcripts.find(c);
  if (it == pack.static_transcripts.end()) {
    findings.push_back(tag + "missing");
    return;
  }
  const auto& turns = it->second;
  if (turns.size() != 15) findings.push_back(tag + "expected 15 turns, found " + std::to_string(turns.size()));
  std::size_t i = 0;
  for (Phase p : kAllPhases) {
    for (Slot s : kSlotOrder) {
      if (i >= turns.size()) return;
      const auto& t = turns[i++];
      if (t.phase != p || t.slot != s) {
        findings.push_back(tag + "turn " + std::to_string(i) + " should be phase " +
                           std::to_string(phase_index(p)) + " " + std::string(to_string(s)));
      }
      const bool scammer = is_scammer_slot(s);
      const Speaker want = c == Condition::Control ? (scammer ? Speaker::StaticA : Speaker::StaticB)
                                                   : (scammer ? Speaker::Scammer : Speaker::Target);
      if (t.speaker != want) findings.push_back(tag + "turn " + std::to_string(i) + " has the wrong speaker");
      if (trim(t.text).empty()) findings.push_back(tag + "turn " + std::to_string(i) + " is empty");
    }
  }
}

}  // namespace

PackReport validate_pack(const PromptPack& pack, QuizCadence cadence) {
  PackReport report;
  report.name = pack.name;
  report.version = pack.version;
  auto& f = report.findings;
  f.insert(f.end(), pack.load_findings.begin(), pack.load_findings.end());
  if (pack.version.empty()) f.emplace_back("manifest: missing version");

  for (AgentRole role : kAllRoles) {
    for (Phase phase : kAllPhases) {
      const auto n = std::count_if(pack.templates.begin(), pack.templates.end(), [&](const PromptTemplate& t) {
        return t.role == role && t.phase == phase;
      });
      const std::string key = "(" + std::string(to_string(role)) + ", " + std::to_string(phase_index(phase)) + ")";
      if (n == 0) f.push_back("missing template " + key);
      if (n > 1) f.push_back("duplicate template " + key);
    }
  }
  for (const auto& t : pack.templates) {
    for (auto& finding : check_template(t)) f.push_back(std::move(finding));
  }

  check_static_transcript(pack, Condition::Control, f);
  check_static_transcript(pack, Condition::Quiz, f);
  for (Condition c : {Condition::Control, Condition::Quiz}) {
    const auto it = pack.static_summaries.find(c);
    if (it == pack.static_summaries.end()) {
      f.push_back("static summaries " + std::string(to_string(c)) + ": missing");
      continue;
    }
    for (std::size_t i = 0; i < it->second.size(); ++i) {
      if (trim(it->second[i].narrative).empty()) {
        f.push_back("static summaries " + std::string(to_string(c)) + ": phase " + std::to_string(i + 1) +
                    " narrative is empty");
      }
    }
  }

  for (auto& finding : check_quiz_bank(pack.quiz_bank, cadence)) f.push_back(std::move(finding));

  for (InstrumentKey key : kAllInstruments) {
    const auto n = std::count_if(pack.instruments.begin(), pack.instruments.end(),
                                 [&](const InstrumentDef& d) { return d.key == key; });
    if (n != 1) f.push_back("instrument " + std::string(to_string(key)) + ": expected 1 definition, found " +
                            std::to_string(n));
  }
  for (const auto& def : pack.instruments) {
    for (auto& finding : check_instrument_structure(def)) f.push_back(std::move(finding));
  }

  if (pack.refusal_retries < 0) f.emplace_back("refusal: retries must be >= 0");
  for (const auto& p : pack.refusal_patterns) {
    try {
      std::regex re(p, std::regex::ECMAScript | std::regex::icase);
    } catch (const std::regex_error&) {
      f.push_back("refusal: invalid pattern '" + p + "'");
    }
  }
  for (const auto& v : pack.tutorial_videos) {
    if (v.duration_ms <= 0) f.push_back("tutorial video " + v.id + ": duration must be positive");
  }
  for (const auto& c : pack.canned_advice) {
    if (c.advice.size() != 6) f.push_back("canned advice " + c.theme_id + ": expected 6 entries");
  }
  report.pass = f.empty();
  return report;
}

PackReport pack_validate(const fs::path& dir, QuizCadence cadence) {
  try {
    return validate_pack(load_pack(dir), cadence);
  } catch (const std::exception& ex) {
    PackReport r;
    r.pass = false;
    r.findings.emplace_back(ex.what());
    return r;
  }
}

Json to_json(const PackReport& report) {
  return Json{{"pass", report.pass},
              {"name", report.name},
              {"version", report.version},
              {"findings", report.findings}};
}

const StaticTurn& static_turn(const PromptPack& pack, Condition condition, Phase phase, Slot slot) {
  const auto it = pack.static_transcripts.find(condition);
  if (it == pack.static_transcripts.end()) {
    fail(ErrorCode::PackInvalid, "pack has no static transcript for " + std::string(to_string(condition)));
  }
  for (const auto& t : it->second) {
    if (t.phase == phase && t.slot == slot) return t;
  }
  fail(ErrorCode::PackInvalid, "static transcript lacks phase " + std::to_string(phase_index(phase)) + " " +
                                   std::string(to_string(slot)));
}

}  // namespace scamsim
