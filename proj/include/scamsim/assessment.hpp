#pragma once

#include <optional>
#include <string>
#include <vector>

#include "scamsim/session.hpp"

namespace scamsim {

enum class InstrumentKey {
  SA6,
  Susceptibility,
  SelfEfficacyPre,
  SelfEfficacyPost,
  ResponseEfficacy,
  Discernment,
  SJQ,
  AttentionChecks,
  Demographics,
};
inline constexpr std::array<InstrumentKey, 9> kAllInstruments{
    InstrumentKey::SA6,         InstrumentKey::Susceptibility,   InstrumentKey::SelfEfficacyPre,
    InstrumentKey::SelfEfficacyPost, InstrumentKey::ResponseEfficacy, InstrumentKey::Discernment,
    InstrumentKey::SJQ,         InstrumentKey::AttentionChecks,  InstrumentKey::Demographics};

std::string_view to_string(InstrumentKey k);
InstrumentKey instrument_from_string(std::string_view s);

enum class Scale { Likert5, Likert7, FreeText, Choice };
enum class TruthClass { None, Scam, Legit };
enum class SurveyPhase { Pre, Tutorial, Post };

std::string_view to_string(SurveyPhase p);

struct ItemDef {
  std::string id;
  std::string text;
  Scale scale = Scale::Likert5;
  TruthClass truth = TruthClass::None;
  std::vector<std::string> options;  // Choice items
  std::string correct_option;        // attention checks
  std::optional<SurveyPhase> stage;  // attention checks are spread across stages
  bool justification = false;        // discernment: free-text "<id>_why" accompanies the rating
};

struct InstrumentDef {
  InstrumentKey key = InstrumentKey::SA6;
  std::string title;
  std::vector<ItemDef> items;
};

InstrumentDef instrument_from_json(const Json& j);
Json to_json(const InstrumentDef& def, bool include_answers);

/// Item-count and scale layout checks for one instrument.
std::vector<std::string> check_instrument_structure(const InstrumentDef& def);

/// Which survey stage administers the given item of the given instrument.
SurveyPhase stage_of(const InstrumentDef& def, const ItemDef& item);

/// Rejects incomplete or out-of-scale responses for the items administered at
/// `stage`. Attention-check answers only need to be one of the offered options.
void validate_stage_responses(const std::vector<InstrumentDef>& instruments, SurveyPhase stage,
                              const Json& responses);

/// Sum of item codes (Likert5 → 1..5, Likert7 → 1..7).
int score_likert_sum(const InstrumentDef& def, const Json& responses);

struct DiscernmentScores {
  int scam_score = 0;
  int legit_score = 0;
};

/// Ratings are stored 1..7 and coded −3..+3. Scam items add the code, legitimate
/// items subtract it, so correct judgments count positive in both scores.
DiscernmentScores score_discernment(const InstrumentDef& def, const Json& responses);

struct SjqScores {
  int sjq_scam = 0;
  int sjq_legit = 0;
};

/// Compliance ratings 1..7. Refusing a scam scores 8 − rating; complying with a
/// legitimate request scores the rating.
SjqScores score_sjq(const InstrumentDef& def, const Json& responses);

struct AttentionResult {
  bool pass = true;
  std::vector<std::string> failed_ids;
};

AttentionResult evaluate_attention_checks(const InstrumentDef& def, const Json& responses);

struct ScoreSheet {
  std::string participant_id;
  std::string session_id;
  Condition condition = Condition::Control;
  int sa6 = 0;
  int susceptibility = 0;
  int se1 = 0;
  int se2 = 0;
  int se_delta = 0;
  int response_efficacy = 0;
  int scam_score = 0;
  int legit_score = 0;
  int sjq_scam = 0;
  int sjq_legit = 0;
  std::int64_t total_system_ms = 0;
  std::int64_t post_survey_ms = 0;
  bool attention_pass = false;
  std::vector<std::string> attention_failed_ids;
};

Json to_json(const ScoreSheet& s);
ScoreSheet score_sheet_from_json(const Json& j);

/// Range checks for every field; returns findings (empty when valid).
std::vector<std::string> check_score_ranges(const ScoreSheet& s);

const InstrumentDef& find_instrument(const std::vector<InstrumentDef>& instruments, InstrumentKey key);

ScoreSheet build_score_sheet(const Session& session, const std::vector<InstrumentDef>& instruments);

}  // namespace scamsim
