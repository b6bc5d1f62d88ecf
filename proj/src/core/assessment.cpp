#include "scamsim/assessment.hpp"

#include <algorithm>
#include <set>

#include "scamsim/error.hpp"
#include "scamsim/text.hpp"

namespace scamsim {

std::string_view to_string(InstrumentKey k) {
  switch (k) {
    case InstrumentKey::SA6: return "sa6";
    case InstrumentKey::Susceptibility: return "susceptibility";
    case InstrumentKey::SelfEfficacyPre: return "self_efficacy_pre";
    case InstrumentKey::SelfEfficacyPost: return "self_efficacy_post";
    case InstrumentKey::ResponseEfficacy: return "response_efficacy";
    case InstrumentKey::Discernment: return "discernment";
    case InstrumentKey::SJQ: return "sjq";
    case InstrumentKey::AttentionChecks: return "attention_checks";
    case InstrumentKey::Demographics: return "demographics";
  }
  return "sa6";
}

InstrumentKey instrument_from_string(std::string_view s) {
  for (auto k : kAllInstruments) {
    if (to_string(k) == s) return k;
  }
  fail(ErrorCode::InvalidArgument, "unknown instrument: '" + std::string(s) + "'");
}

std::string_view to_string(SurveyPhase p) {
  switch (p) {
    case SurveyPhase::Pre: return "pre";
    case SurveyPhase::Tutorial: return "tutorial";
    case SurveyPhase::Post: return "post";
  }
  return "pre";
}

namespace {

Scale scale_from_string(std::string_view s) {
  if (s == "likert5") return Scale::Likert5;
  if (s == "likert7") return Scale::Likert7;
  if (s == "free_text") return Scale::FreeText;
  if (s == "choice") return Scale::Choice;
  fail(ErrorCode::InvalidArgument, "unknown scale: '" + std::string(s) + "'");
}

std::string_view scale_name(Scale s) {
  switch (s) {
    case Scale::Likert5: return "likert5";
    case Scale::Likert7: return "likert7";
    case Scale::FreeText: return "free_text";
    case Scale::Choice: return "choice";
  }
  return "likert5";
}

TruthClass truth_from_string(std::string_view s) {
  if (s == "scam") return TruthClass::Scam;
  if (s == "legit") return TruthClass::Legit;
  if (s.empty() || s == "n/a") return TruthClass::None;
  fail(ErrorCode::InvalidArgument, "unknown truth class: '" + std::string(s) + "'");
}

std::string_view truth_name(TruthClass t) {
  switch (t) {
    case TruthClass::Scam: return "scam";
    case TruthClass::Legit: return "legit";
    case TruthClass::None: return "n/a";
  }
  return "n/a";
}

SurveyPhase survey_phase_from_string(std::string_view s) {
  if (s == "pre") return SurveyPhase::Pre;
  if (s == "tutorial") return SurveyPhase::Tutorial;
  if (s == "post") return SurveyPhase::Post;
  fail(ErrorCode::InvalidArgument, "unknown survey stage: '" + std::string(s) + "'");
}

int scale_max(Scale s) { return s == Scale::Likert5 ? 5 : 7; }

const Json* item_value(const Json& responses, const std::string& id) {
  if (!responses.is_object()) return nullptr;
  const auto it = responses.find(id);
  if (it == responses.end() || it->is_null()) return nullptr;
  return &*it;
}

int likert_code(const InstrumentDef& def, const ItemDef& item, const Json& responses) {
  const Json* v = item_value(responses, item.id);
  if (!v) fail(ErrorCode::MissingItem, std::string(to_string(def.key)) + ": missing item " + item.id);
  if (!v->is_number_integer()) {
    fail(ErrorCode::OutOfScale, std::string(to_string(def.key)) + ": item " + item.id + " is not an integer");
  }
  const int code = v->get<int>();
  if (code < 1 || code > scale_max(item.scale)) {
    fail(ErrorCode::OutOfScale, std::string(to_string(def.key)) + ": item " + item.id + " value " +
                                    std::to_string(code) + " outside 1.." +
                                    std::to_string(scale_max(item.scale)));
  }
  return code;
}

bool is_likert(Scale s) { return s == Scale::Likert5 || s == Scale::Likert7; }

}  // namespace

InstrumentDef instrument_from_json(const Json& j) {
  InstrumentDef def;
  def.key = instrument_from_string(j.at("key").get<std::string>());
  def.title = j.value("title", std::string{});
  for (const auto& it : j.at("items")) {
    ItemDef item;
    item.id = it.at("id").get<std::string>();
    item.text = it.at("text").get<std::string>();
    item.scale = scale_from_string(it.at("scale").get<std::string>());
    item.truth = truth_from_string(it.value("truth_class", std::string{}));
    if (it.contains("options")) item.options = it.at("options").get<std::vector<std::string>>();
    item.correct_option = it.value("correct_option", std::string{});
    if (it.contains("stage")) item.stage = survey_phase_from_string(it.at("stage").get<std::string>());
    item.justification = it.value("justification", false);
    def.items.push_back(std::move(item));
  }
  return def;
}

Json to_json(const InstrumentDef& def, bool include_answers) {
  Json items = Json::array();
  for (const auto& item : def.items) {
    Json j{{"id", item.id}, {"text", item.text}, {"scale", scale_name(item.scale)}};
    if (item.truth != TruthClass::None && include_answers) j["truth_class"] = truth_name(item.truth);
    if (!item.options.empty()) j["options"] = item.options;
    if (include_answers && !item.correct_option.empty()) j["correct_option"] = item.correct_option;
    if (item.stage) j["stage"] = to_string(*item.stage);
    if (item.justification) j["justification"] = true;
    items.push_back(std::move(j));
  }
  return Json{{"key", to_string(def.key)}, {"title", def.title}, {"items", items}};
}

std::vector<std::string> check_instrument_structure(const InstrumentDef& def) {
  std::vector<std::string> findings;
  const std::string tag = std::string(to_string(def.key)) + ": ";
  auto count_scale = [&](Scale s) {
    return std::count_if(def.items.begin(), def.items.end(), [&](const ItemDef& i) { return i.scale == s; });
  };
  auto count_truth = [&](TruthClass t) {
    return std::count_if(def.items.begin(), def.items.end(), [&](const ItemDef& i) { return i.truth == t; });
  };
  auto expect_likert = [&](std::size_t n, Scale s) {
    if (def.items.size() != n || static_cast<std::size_t>(count_scale(s)) != n) {
      findings.push_back(tag + "expected " + std::to_string(n) + " " + std::string(scale_name(s)) +
                         " items, found " + std::to_string(def.items.size()));
    }
  };
  std::set<std::string> ids;
  for (const auto& item : def.items) {
    if (!ids.insert(item.id).second) findings.push_back(tag + "duplicate item id " + item.id);
  }
  switch (def.key) {
    case InstrumentKey::SA6: expect_likert(6, Scale::Likert5); break;
    case InstrumentKey::Susceptibility: expect_likert(3, Scale::Likert5); break;
    case InstrumentKey::SelfEfficacyPre:
    case InstrumentKey::SelfEfficacyPost:
    case InstrumentKey::ResponseEfficacy: expect_likert(4, Scale::Likert5); break;
    case InstrumentKey::Discernment:
      expect_likert(12, Scale::Likert7);
      if (count_truth(TruthClass::Scam) != 6 || count_truth(TruthClass::Legit) != 6) {
        findings.push_back(tag + "expected 6 scam and 6 legit scenarios");
      }
      for (const auto& item : def.items) {
        if (!item.justification) findings.push_back(tag + "scenario " + item.id + " lacks a justification prompt");
      }
      break;
    case InstrumentKey::SJQ:
      expect_likert(8, Scale::Likert7);
      if (count_truth(TruthClass::Scam) != 4 || count_truth(TruthClass::Legit) != 4) {
        findings.push_back(tag + "expected 4 scam and 4 legit scenarios");
      }
      break;
    case InstrumentKey::AttentionChecks: {
      if (def.items.size() != 6) findings.push_back(tag + "expected 6 attention checks");
      int pre = 0, tut = 0, post = 0;
      for (const auto& item : def.items) {
        if (!item.stage) {
          findings.push_back(tag + "item " + item.id + " has no stage");
          continue;
        }
        if (*item.stage == SurveyPhase::Pre) ++pre;
        if (*item.stage == SurveyPhase::Tutorial) ++tut;
        if (*item.stage == SurveyPhase::Post) ++post;
        if (std::find(item.options.begin(), item.options.end(), item.correct_option) == item.options.end()) {
          findings.push_back(tag + "item " + item.id + " correct option is not among its options");
        }
      }
      if (pre != 2 || tut != 1 || post != 3) findings.push_back(tag + "expected 2 pre, 1 tutorial, 3 post items");
      break;
    }
    case InstrumentKey::Demographics:
      if (def.items.empty()) findings.push_back(tag + "no items");
      break;
  }
  return findings;
}

SurveyPhase stage_of(const InstrumentDef& def, const ItemDef& item) {
  switch (def.key) {
    case InstrumentKey::Demographics:
    case InstrumentKey::SA6:
    case InstrumentKey::Susceptibility:
    case InstrumentKey::SelfEfficacyPre:
      return SurveyPhase::Pre;
    case InstrumentKey::AttentionChecks:
      return item.stage.value_or(SurveyPhase::Post);
    default:
      return SurveyPhase::Post;
  }
}

void validate_stage_responses(const std::vector<InstrumentDef>& instruments, SurveyPhase stage,
                              const Json& responses) {
  if (!responses.is_object()) fail(ErrorCode::InvalidArgument, "responses must be an object");
  for (const auto& def : instruments) {
    const std::string key(to_string(def.key));
    const Json empty = Json::object();
    const Json& answers = responses.contains(key) ? responses.at(key) : empty;
    for (const auto& item : def.items) {
      if (stage_of(def, item) != stage) continue;
      if (is_likert(item.scale)) {
        likert_code(def, item, answers);
        continue;
      }
      const Json* v = item_value(answers, item.id);
      if (item.scale == Scale::FreeText) {
        if (v && !v->is_string()) fail(ErrorCode::OutOfScale, key + ": item " + item.id + " must be text");
        continue;
      }
      if (!v) fail(ErrorCode::MissingItem, key + ": missing item " + item.id);
      if (!v->is_string() ||
          std::find(item.options.begin(), item.options.end(), v->get<std::string>()) == item.options.end()) {
        fail(ErrorCode::OutOfScale, key + ": item " + item.id + " answer is not one of its options");
      }
    }
  }
}

int score_likert_sum(const InstrumentDef& def, const Json& responses) {
  int sum = 0;
  for (const auto& item : def.items) {
    if (is_likert(item.scale)) sum += likert_code(def, item, responses);
  }
  return sum;
}

DiscernmentScores score_discernment(const InstrumentDef& def, const Json& responses) {
  DiscernmentScores s;
  for (const auto& item : def.items) {
    if (item.scale != Scale::Likert7) continue;
    const int code = likert_code(def, item, responses) - 4;
    if (item.truth == TruthClass::Scam) s.scam_score += code;
    if (item.truth == TruthClass::Legit) s.legit_score -= code;
  }
  return s;
}

SjqScores score_sjq(const InstrumentDef& def, const Json& responses) {
  SjqScores s;
  for (const auto& item : def.items) {
    if (item.scale != Scale::Likert7) continue;
    const int rating = likert_code(def, item, responses);
    if (item.truth == TruthClass::Scam) s.sjq_scam += 8 - rating;
    if (item.truth == TruthClass::Legit) s.sjq_legit += rating;
  }
  return s;
}

AttentionResult evaluate_attention_checks(const InstrumentDef& def, const Json& responses) {
  AttentionResult r;
  for (const auto& item : def.items) {
    const Json* v = item_value(responses, item.id);
    if (!v) fail(ErrorCode::MissingItem, "attention_checks: missing item " + item.id);
    const std::string answer = v->is_string() ? v->get<std::string>() : v->dump();
    if (!iequals(trim(answer), trim(item.correct_option))) {
      r.pass = false;
      r.failed_ids.push_back(item.id);
    }
  }
  return r;
}

Json to_json(const ScoreSheet& s) {
  return Json{{"participant_id", s.participant_id},
              {"session_id", s.session_id},
              {"condition", to_string(s.condition)},
              {"sa6", s.sa6},
              {"susceptibility", s.susceptibility},
              {"se1", s.se1},
              {"se2", s.se2},
              {"se_delta", s.se_delta},
              {"response_efficacy", s.response_efficacy},
              {"scam_score", s.scam_score},
              {"legit_score", s.legit_score},
              {"sjq_scam", s.sjq_scam},
              {"sjq_legit", s.sjq_legit},
              {"total_system_ms", s.total_system_ms},
              {"post_survey_ms", s.post_survey_ms},
              {"attention_pass", s.attention_pass},
              {"attention_failed_ids", s.attention_failed_ids}};
}

ScoreSheet score_sheet_from_json(const Json& j) {
  ScoreSheet s;
  s.participant_id = j.at("participant_id").get<std::string>();
  s.session_id = j.at("session_id").get<std::string>();
  s.condition = condition_from_string(j.at("condition").get<std::string>());
  s.sa6 = j.at("sa6").get<int>();
  s.susceptibility = j.at("susceptibility").get<int>();
  s.se1 = j.at("se1").get<int>();
  s.se2 = j.at("se2").get<int>();
  s.se_delta = j.at("se_delta").get<int>();
  s.response_efficacy = j.at("response_efficacy").get<int>();
  s.scam_score = j.at("scam_score").get<int>();
  s.legit_score = j.at("legit_score").get<int>();
  s.sjq_scam = j.at("sjq_scam").get<int>();
  s.sjq_legit = j.at("sjq_legit").get<int>();
  s.total_system_ms = j.at("total_system_ms").get<std::int64_t>();
  s.post_survey_ms = j.at("post_survey_ms").get<std::int64_t>();
  s.attention_pass = j.at("attention_pass").get<bool>();
  s.attention_failed_ids = j.at("attention_failed_ids").get<std::vector<std::string>>();
  return s;
}

std::vector<std::string> check_score_ranges(const ScoreSheet& s) {
  std::vector<std::string> findings;
  auto in = [&](const char* name, long long v, long long lo, long long hi) {
    if (v < lo || v > hi) {
      findings.push_back(std::string(name) + "=" + std::to_string(v) + " outside " + std::to_string(lo) +
                         ".." + std::to_string(hi));
    }
  };
  in("sa6", s.sa6, 6, 30);
  in("susceptibility", s.susceptibility, 3, 15);
  in("se1", s.se1, 4, 20);
  in("se2", s.se2, 4, 20);
  in("se_delta", s.se_delta, -16, 16);
  in("response_efficacy", s.response_efficacy, 4, 20);
  in("scam_score", s.scam_score, -18, 18);
  in("legit_score", s.legit_score, -18, 18);
  in("sjq_scam", s.sjq_scam, 4, 28);
  in("sjq_legit", s.sjq_legit, 4, 28);
  if (s.se_delta != s.se2 - s.se1) findings.emplace_back("se_delta != se2 - se1");
  if (s.total_system_ms < 0) findings.emplace_back("negative total_system_ms");
  if (s.post_survey_ms < 0) findings.emplace_back("negative post_survey_ms");
  return findings;
}

const InstrumentDef& find_instrument(const std::vector<InstrumentDef>& instruments, InstrumentKey key) {
  for (const auto& def : instruments) {
    if (def.key == key) return def;
  }
  fail(ErrorCode::MissingItem, "instrument " + std::string(to_string(key)) + " is not defined");
}

namespace {

const Json& answers_for(const Session& session, InstrumentKey key) {
  static const Json empty = Json::object();
  const std::string k(to_string(key));
  return session.survey_responses.contains(k) ? session.survey_responses.at(k) : empty;
}

std::optional<Timestamp> completion_time(const Session& session, const Step& step) {
  for (const auto& e : session.events) {
    if (e.kind == "step_completed" && step_from_json(e.payload.at("step")) == step) return e.at;
  }
  return std::nullopt;
}

}  // namespace

ScoreSheet build_score_sheet(const Session& session, const std::vector<InstrumentDef>& instruments) {
  if (session.status != SessionStatus::Completed) {
    fail(ErrorCode::SessionIncomplete, "session " + session.id + " is not completed");
  }
  ScoreSheet s;
  s.participant_id = session.participant_id;
  s.session_id = session.id;
  s.condition = session.condition;
  auto sum = [&](InstrumentKey key) { return score_likert_sum(find_instrument(instruments, key), answers_for(session, key)); };
  s.sa6 = sum(InstrumentKey::SA6);
  s.susceptibility = sum(InstrumentKey::Susceptibility);
  s.se1 = sum(InstrumentKey::SelfEfficacyPre);
  s.se2 = sum(InstrumentKey::SelfEfficacyPost);
  s.se_delta = s.se2 - s.se1;
  s.response_efficacy = sum(InstrumentKey::ResponseEfficacy);
  const auto disc = score_discernment(find_instrument(instruments, InstrumentKey::Discernment),
                                      answers_for(session, InstrumentKey::Discernment));
  s.scam_score = disc.scam_score;
  s.legit_score = disc.legit_score;
  const auto sjq = score_sjq(find_instrument(instruments, InstrumentKey::SJQ), answers_for(session, InstrumentKey::SJQ));
  s.sjq_scam = sjq.sjq_scam;
  s.sjq_legit = sjq.sjq_legit;
  const auto att = evaluate_attention_checks(find_instrument(instruments, InstrumentKey::AttentionChecks),
                                             answers_for(session, InstrumentKey::AttentionChecks));
  s.attention_pass = att.pass;
  s.attention_failed_ids = att.failed_ids;

  // System time runs from the end of the tutorial to the last feedback summary;
  // the post-survey runs from there to its submission.
  const auto tutorial_done = completion_time(session, Step::simple(StepType::Tutorial));
  const auto system_done = completion_time(session, Step::feedback(Phase::Extraction));
  const auto survey_done = completion_time(session, Step::simple(StepType::SurveyPost));
  if (!tutorial_done || !system_done || !survey_done) {
    fail(ErrorCode::SessionIncomplete, "session " + session.id + " lacks timing events");
  }
  s.total_system_ms = *system_done - *tutorial_done;
  s.post_survey_ms = *survey_done - *system_done;
  return s;
}

}  // namespace scamsim
