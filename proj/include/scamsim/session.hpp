#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "scamsim/json.hpp"

namespace scamsim {

/// UTC epoch milliseconds.
using Timestamp = std::int64_t;

enum class Condition { Control, Quiz, Advice, QuizAdvice };
inline constexpr std::array<Condition, 4> kAllConditions{
    Condition::Control, Condition::Quiz, Condition::Advice, Condition::QuizAdvice};

std::string_view to_string(Condition c);
Condition condition_from_string(std::string_view s);

inline bool has_quiz(Condition c) { return c == Condition::Quiz || c == Condition::QuizAdvice; }
inline bool has_advice(Condition c) { return c == Condition::Advice || c == Condition::QuizAdvice; }
/// Advice-bearing conditions run the live scammer/target pipeline; the others replay fixtures.
inline bool is_dynamic(Condition c) { return has_advice(c); }

enum class Phase : int { TrustBuilding = 1, Manipulation = 2, Extraction = 3 };
inline constexpr std::array<Phase, 3> kAllPhases{Phase::TrustBuilding, Phase::Manipulation,
                                                 Phase::Extraction};

inline int phase_index(Phase p) { return static_cast<int>(p); }
Phase phase_from_index(int index);
std::string_view to_string(Phase p);      // "trust_building" ...
std::string_view display_name(Phase p);   // "Trust building" ...

enum class Slot { S1, T1, S2, T2, S3 };
inline constexpr std::array<Slot, 5> kSlotOrder{Slot::S1, Slot::T1, Slot::S2, Slot::T2, Slot::S3};

std::string_view to_string(Slot s);
Slot slot_from_string(std::string_view s);
inline bool is_scammer_slot(Slot s) { return s == Slot::S1 || s == Slot::S2 || s == Slot::S3; }
/// T1/T2 pair with advice ordinals 1/2.
int target_slot_ordinal(Slot s);

enum class Speaker { Scammer, Target, StaticA, StaticB };
std::string_view to_string(Speaker s);
Speaker speaker_from_string(std::string_view s);

enum class Origin { Generated, StaticFixture };
std::string_view to_string(Origin o);
Origin origin_from_string(std::string_view s);

enum class QuizCadence { BeforeEachAdvice, AfterEachScammerMessage };
std::string_view to_string(QuizCadence c);
QuizCadence cadence_from_string(std::string_view s);

enum class StepType {
  SurveyPre,
  Tutorial,
  RevealMessage,
  Quiz,
  AdviceInput,
  FeedbackSummary,
  SurveyPost,
  Done,
};
inline constexpr std::array<StepType, 8> kAllStepTypes{
    StepType::SurveyPre,   StepType::Tutorial,        StepType::RevealMessage,
    StepType::Quiz,        StepType::AdviceInput,     StepType::FeedbackSummary,
    StepType::SurveyPost,  StepType::Done};

std::string_view to_string(StepType t);
StepType step_type_from_string(std::string_view s);

/// One entry of a step script. Fields other than `type` only carry meaning for
/// the step types that use them (phase for dialogue steps, slot/speaker for
/// reveals, ordinal for quiz and advice steps).
struct Step {
  StepType type = StepType::Done;
  Phase phase = Phase::TrustBuilding;
  Slot slot = Slot::S1;
  Speaker speaker = Speaker::Scammer;
  int ordinal = 0;

  static Step simple(StepType t) { return Step{t}; }
  static Step reveal(Speaker speaker, Phase phase, Slot slot) {
    return Step{StepType::RevealMessage, phase, slot, speaker, 0};
  }
  static Step quiz(Phase phase, int ordinal) {
    return Step{StepType::Quiz, phase, Slot::S1, Speaker::Scammer, ordinal};
  }
  static Step advice(Phase phase, int ordinal) {
    return Step{StepType::AdviceInput, phase, Slot::S1, Speaker::Scammer, ordinal};
  }
  static Step feedback(Phase phase) {
    return Step{StepType::FeedbackSummary, phase, Slot::S1, Speaker::Scammer, 0};
  }

  bool has_phase() const {
    return type == StepType::RevealMessage || type == StepType::Quiz ||
           type == StepType::AdviceInput || type == StepType::FeedbackSummary;
  }

  bool operator==(const Step& other) const;
};

std::string describe(const Step& step);

struct StepScript {
  Condition condition = Condition::Control;
  QuizCadence cadence = QuizCadence::BeforeEachAdvice;
  std::vector<Step> steps;
};

StepScript build_step_script(Condition condition,
                             QuizCadence cadence = QuizCadence::BeforeEachAdvice);

/// Returns one human-readable finding per violated invariant; empty when valid.
std::vector<std::string> check_script_invariants(const StepScript& script);

/// Full participant flow: the pre-survey followed by the condition script.
std::vector<Step> session_flow(const StepScript& script);

struct Message {
  Speaker speaker = Speaker::Scammer;
  Phase phase = Phase::TrustBuilding;
  Slot slot = Slot::S1;
  std::string text;
  Origin origin = Origin::Generated;
  Timestamp timestamp = 0;
};

struct AdviceRecord {
  Phase phase = Phase::TrustBuilding;
  int ordinal = 1;
  std::string text;
  Timestamp submitted_at = 0;
  std::int64_t elapsed_ms = 0;
};

struct QuizAttempt {
  int chosen_index = 0;
  Timestamp at = 0;
};

struct QuizAttemptLog {
  std::string item_id;
  Phase phase = Phase::TrustBuilding;
  int ordinal = 1;
  std::vector<QuizAttempt> attempts;
  bool solved = false;
  std::int64_t elapsed_ms = 0;
};

enum class Verdict { Helpful, Unhelpful };
std::string_view to_string(Verdict v);

struct FeedbackRecord {
  Phase phase = Phase::TrustBuilding;
  Verdict verdict = Verdict::Helpful;
  std::string narrative;
  std::string next_phase_preview;
  // Static summaries (Control/Quiz) carry a fixed Helpful verdict that nothing reads.
  bool generated = true;
};

struct TimedEvent {
  std::string kind;
  Json payload;
  Timestamp at = 0;
};

enum class SessionStatus { Active, Completed, Abandoned };
std::string_view to_string(SessionStatus s);

enum class SurveyStage { Pre, Post };

struct Session {
  std::string id;
  std::string participant_id;
  Condition condition = Condition::Control;
  QuizCadence cadence = QuizCadence::BeforeEachAdvice;
  std::uint64_t seed = 0;
  std::vector<Step> steps;
  std::size_t cursor = 0;
  Timestamp created_at = 0;
  Timestamp step_entered_at = 0;
  std::vector<Message> transcript;
  std::vector<AdviceRecord> advice_log;
  std::vector<QuizAttemptLog> quiz_log;
  std::vector<FeedbackRecord> feedback_log;
  Json survey_responses = Json::object();
  std::vector<TimedEvent> events;
  SessionStatus status = SessionStatus::Active;

  // Attempts on the quiz item at the cursor, moved into quiz_log once solved.
  std::optional<QuizAttemptLog> active_quiz;
  // Content prepared for the reveal/feedback step at the cursor but not yet shown.
  std::optional<Message> staged_message;
  std::optional<FeedbackRecord> staged_feedback;

  const Step& current_step() const { return steps.at(cursor); }
  const AdviceRecord* find_advice(Phase phase, int ordinal) const;
  const QuizAttemptLog* find_quiz(Phase phase, int ordinal) const;
};

Session make_session(std::string id, std::string participant_id, Condition condition,
                     QuizCadence cadence, std::uint64_t seed, Timestamp now);

namespace event {
struct SurveySubmitted {
  SurveyStage stage = SurveyStage::Pre;
  Json responses = Json::object();
};
struct TutorialCompleted {
  Json responses = Json::object();  // tutorial attention check
};
struct MessageRevealed {
  Message message;
};
struct QuizSolved {
  QuizAttemptLog log;
};
struct AdviceSubmitted {
  std::string text;
  // When given, the step the client believes it is answering.
  std::optional<Phase> phase;
  std::optional<int> ordinal;
};
struct FeedbackDelivered {
  FeedbackRecord record;
};
}  // namespace event

using SessionEvent =
    std::variant<event::SurveySubmitted, event::TutorialCompleted, event::MessageRevealed,
                 event::QuizSolved, event::AdviceSubmitted, event::FeedbackDelivered>;

std::string_view event_name(const SessionEvent& ev);

/// Applies one event to the step at the cursor and moves the cursor forward by one.
Session advance(Session session, const SessionEvent& ev, Timestamp at);

/// Appends a non-transition event (quiz attempts, incidents, staging).
void record_event(Session& session, std::string kind, Json payload, Timestamp at);

Timestamp last_activity(const Session& session);

/// Marks an idle Active session Abandoned; returns true when it changed.
bool mark_abandoned_if_idle(Session& session, Timestamp now, std::int64_t timeout_ms);

struct SessionProgress {
  Phase phase = Phase::TrustBuilding;
  std::size_t step_index = 0;
  std::size_t steps_total = 0;
  double percent = 0.0;
};

SessionProgress session_progress(const Session& session);

enum class AllocatorMode { Uniform, BalancedBlock };
std::string_view to_string(AllocatorMode m);
AllocatorMode allocator_mode_from_string(std::string_view s);

class ConditionAllocator {
 public:
  explicit ConditionAllocator(AllocatorMode mode, std::optional<std::uint64_t> seed = {});

  Condition assign();

  AllocatorMode mode() const { return mode_; }
  const std::array<int, 4>& counts() const { return counts_; }

 private:
  AllocatorMode mode_;
  std::mt19937_64 rng_;
  std::array<int, 4> counts_{};
  std::array<bool, 4> used_in_block_{};
};

// Canonical document form. Field order is fixed, so equal sessions serialize to
// equal bytes.
Json to_json(const Step& step);
Step step_from_json(const Json& j);
Json to_json(const Message& m);
Message message_from_json(const Json& j);
Json to_json(const AdviceRecord& a);
Json to_json(const QuizAttemptLog& q);
QuizAttemptLog quiz_log_from_json(const Json& j);
Json to_json(const FeedbackRecord& f);
FeedbackRecord feedback_from_json(const Json& j);
Json to_json(const Session& s);
Session session_from_json(const Json& j);
std::string serialize_session(const Session& s);

}  // namespace scamsim
