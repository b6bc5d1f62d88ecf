#include "scamsim/service/export.hpp"

#include <numeric>

namespace scamsim::service {

const std::vector<std::string>& export_header() {
  static const std::vector<std::string> header = [] {
    std::vector<std::string> h{"participant_id", "session_id",     "condition",       "included",
                               "attention_pass", "completed",      "sa6",             "susceptibility",
                               "se1",            "se2",            "se_delta",        "response_efficacy",
                               "scam_score",     "legit_score",    "sjq_scam",        "sjq_legit",
                               "total_system_ms", "post_survey_ms", "quiz_attempts_total", "quiz_items",
                               "advice_count"};
    for (int p = 1; p <= 3; ++p) {
      for (int o = 1; o <= 2; ++o) h.push_back("advice_ms_" + std::to_string(p) + "_" + std::to_string(o));
    }
    return h;
  }();
  return header;
}

stats::ObservationTable export_table(const std::vector<Session>& sessions,
                                     const std::vector<InstrumentDef>& instruments, bool include_excluded) {
  stats::ObservationTable t;
  t.header = export_header();
  for (const auto& s : sessions) {
    if (s.status != SessionStatus::Completed) continue;
    const ScoreSheet sheet = build_score_sheet(s, instruments);
    if (!sheet.attention_pass && !include_excluded) continue;
    std::size_t attempts = 0;
    for (const auto& q : s.quiz_log) attempts += q.attempts.size();
    std::vector<std::string> row{sheet.participant_id,
                                 sheet.session_id,
                                 std::string(to_string(sheet.condition)),
                                 sheet.attention_pass ? "1" : "0",
                                 sheet.attention_pass ? "1" : "0",
                                 "1",
                                 std::to_string(sheet.sa6),
                                 std::to_string(sheet.susceptibility),
                                 std::to_string(sheet.se1),
                                 std::to_string(sheet.se2),
                                 std::to_string(sheet.se_delta),
                                 std::to_string(sheet.response_efficacy),
                                 std::to_string(sheet.scam_score),
                                 std::to_string(sheet.legit_score),
                                 std::to_string(sheet.sjq_scam),
                                 std::to_string(sheet.sjq_legit),
                                 std::to_string(sheet.total_system_ms),
                                 std::to_string(sheet.post_survey_ms),
                                 std::to_string(attempts),
                                 std::to_string(s.quiz_log.size()),
                                 std::to_string(s.advice_log.size())};
    for (Phase p : kAllPhases) {
      for (int o = 1; o <= 2; ++o) {
        const auto* a = s.find_advice(p, o);
        row.push_back(a ? std::to_string(a->elapsed_ms) : std::string{});
      }
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

Json export_transcripts(const std::vector<Session>& sessions) {
  Json out = Json::array();
  for (const auto& s : sessions) {
    Json transcript = Json::array();
    for (const auto& m : s.transcript) transcript.push_back(to_json(m));
    Json advice = Json::array();
    for (const auto& a : s.advice_log) advice.push_back(to_json(a));
    Json quiz = Json::array();
    for (const auto& q : s.quiz_log) quiz.push_back(to_json(q));
    Json feedback = Json::array();
    for (const auto& f : s.feedback_log) feedback.push_back(to_json(f));
    out.push_back(Json{{"session_id", s.id},
                       {"participant_id", s.participant_id},
                       {"condition", to_string(s.condition)},
                       {"status", to_string(s.status)},
                       {"transcript", transcript},
                       {"advice_log", advice},
                       {"quiz_log", quiz},
                       {"feedback_log", feedback},
                       {"survey_responses", s.survey_responses}});
  }
  return out;
}

}  // namespace scamsim::service
