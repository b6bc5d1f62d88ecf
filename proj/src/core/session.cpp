#include "scamsim/session.hpp"

#include <algorithm>

#include "scamsim/error.hpp"
#include "scamsim/text.hpp"

namespace scamsim {

namespace {

template <typename E, std::size_t N>
E parse_enum(std::string_view s, const std::array<E, N>& values, std::string_view what) {
  for (E v : values) {
    if (to_string(v) == s) return v;
  }
  fail(ErrorCode::InvalidArgument, "unknown " + std::string(what) + ": '" + std::string(s) + "'");
}

constexpr std::array<Speaker, 4> kSpeakers{Speaker::Scammer, Speaker::Target, Speaker::StaticA,
                                           Speaker::StaticB};
constexpr std::array<Origin, 2> kOrigins{Origin::Generated, Origin::StaticFixture};
constexpr std::array<QuizCadence, 2> kCadences{QuizCadence::BeforeEachAdvice,
                                               QuizCadence::AfterEachScammerMessage};
constexpr std::array<Verdict, 2> kVerdicts{Verdict::Helpful, Verdict::Unhelpful};
constexpr std::array<SessionStatus, 3> kStatuses{SessionStatus::Active, SessionStatus::Completed,
                                                 SessionStatus::Abandoned};
constexpr std::array<AllocatorMode, 2> kAllocatorModes{AllocatorMode::Uniform,
                                                       AllocatorMode::BalancedBlock};

int scammer_slot_ordinal(Slot s) {
  switch (s) {
    case Slot::S1: return 1;
    case Slot::S2: return 2;
    case Slot::S3: return 3;
    default: return 0;
  }
}

}  // namespace

std::string_view to_string(Condition c) {
  switch (c) {
    case Condition::Control: return "control";
    case Condition::Quiz: return "quiz";
    case Condition::Advice: return "advice";
    case Condition::QuizAdvice: return "quiz_advice";
  }
  return "control";
}

Condition condition_from_string(std::string_view s) {
  return parse_enum(s, kAllConditions, "condition");
}

Phase phase_from_index(int index) {
  if (index < 1 || index > 3) {
    fail(ErrorCode::InvalidArgument, "phase index out of range: " + std::to_string(index));
  }
  return static_cast<Phase>(index);
}

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::TrustBuilding: return "trust_building";
    case Phase::Manipulation: return "manipulation";
    case Phase::Extraction: return "extraction";
  }
  return "trust_building";
}

std::string_view display_name(Phase p) {
  switch (p) {
    case Phase::TrustBuilding: return "Trust building";
    case Phase::Manipulation: return "Manipulation";
    case Phase::Extraction: return "Extraction";
  }
  return "Trust building";
}

std::string_view to_string(Slot s) {
  switch (s) {
    case Slot::S1: return "S1";
    case Slot::T1: return "T1";
    case Slot::S2: return "S2";
    case Slot::T2: return "T2";
    case Slot::S3: return "S3";
  }
  return "S1";
}

Slot slot_from_string(std::string_view s) { return parse_enum(s, kSlotOrder, "slot"); }

int target_slot_ordinal(Slot s) {
  if (s == Slot::T1) return 1;
  if (s == Slot::T2) return 2;
  fail(ErrorCode::InvalidArgument, "not a target slot: " + std::string(to_string(s)));
}

std::string_view to_string(Speaker s) {
  switch (s) {
    case Speaker::Scammer: return "scammer";
    case Speaker::Target: return "target";
    case Speaker::StaticA: return "static_a";
    case Speaker::StaticB: return "static_b";
  }
  return "scammer";
}

Speaker speaker_from_string(std::string_view s) { return parse_enum(s, kSpeakers, "speaker"); }

std::string_view to_string(Origin o) {
  return o == Origin::Generated ? "generated" : "static_fixture";
}

Origin origin_from_string(std::string_view s) { return parse_enum(s, kOrigins, "origin"); }

std::string_view to_string(QuizCadence c) {
  return c == QuizCadence::BeforeEachAdvice ? "before_each_advice" : "after_each_scammer_message";
}

QuizCadence cadence_from_string(std::string_view s) {
  return parse_enum(s, kCadences, "quiz cadence");
}

std::string_view to_string(StepType t) {
  switch (t) {
    case StepType::SurveyPre: return "survey_pre";
    case StepType::Tutorial: return "tutorial";
    case StepType::RevealMessage: return "reveal";
    case StepType::Quiz: return "quiz";
    case StepType::AdviceInput: return "advice";
    case StepType::FeedbackSummary: return "feedback";
    case StepType::SurveyPost: return "survey_post";
    case StepType::Done: return "done";
  }
  return "done";
}

StepType step_type_from_string(std::string_view s) {
  return parse_enum(s, kAllStepTypes, "step type");
}

std::string_view to_string(Verdict v) { return v == Verdict::Helpful ? "helpful" : "unhelpful"; }

std::string_view to_string(SessionStatus s) {
  switch (s) {
    case SessionStatus::Active: return "active";
    case SessionStatus::Completed: return "completed";
    case SessionStatus::Abandoned: return "abandoned";
  }
  return "active";
}

std::string_view to_string(AllocatorMode m) {
  return m == AllocatorMode::Uniform ? "uniform" : "balanced_block";
}

AllocatorMode allocator_mode_from_string(std::string_view s) {
  return parse_enum(s, kAllocatorModes, "allocator mode");
}

bool Step::operator==(const Step& o) const {
  if (type != o.type) return false;
  switch (type) {
    case StepType::RevealMessage:
      return phase == o.phase && slot == o.slot && speaker == o.speaker;
    case StepType::Quiz:
    case StepType::AdviceInput:
      return phase == o.phase && ordinal == o.ordinal;
    case StepType::FeedbackSummary:
      return phase == o.phase;
    default:
      return true;
  }
}

std::string describe(const Step& step) {
  const auto p = std::to_string(phase_index(step.phase));
  switch (step.type) {
    case StepType::RevealMessage:
      return "Reveal(" + std::string(to_string(step.speaker)) + "," + p + "," +
             std::string(to_string(step.slot)) + ")";
    case StepType::Quiz:
      return "Quiz(" + p + "," + std::to_string(step.ordinal) + ")";
    case StepType::AdviceInput:
      return "AdviceInput(" + p + "," + std::to_string(step.ordinal) + ")";
    case StepType::FeedbackSummary:
      return "FeedbackSummary(" + p + ")";
    default:
      return std::string(to_string(step.type));
  }
}

StepScript build_step_script(Condition condition, QuizCadence cadence) {
  StepScript script{condition, cadence, {}};
  auto& out = script.steps;
  out.push_back(Step::simple(StepType::Tutorial));
  for (Phase phase : kAllPhases) {
    for (Slot slot : kSlotOrder) {
      const bool scammer = is_scammer_slot(slot);
      Speaker speaker;
      if (condition == Condition::Control) {
        speaker = scammer ? Speaker::StaticA : Speaker::StaticB;
      } else {
        speaker = scammer ? Speaker::Scammer : Speaker::Target;
      }
      out.push_back(Step::reveal(speaker, phase, slot));
      if (!scammer) continue;
      const int ord = scammer_slot_ordinal(slot);
      const bool quiz_here =
          has_quiz(condition) && (ord <= 2 || cadence == QuizCadence::AfterEachScammerMessage);
      if (quiz_here) out.push_back(Step::quiz(phase, ord));
      if (has_advice(condition) && ord <= 2) out.push_back(Step::advice(phase, ord));
    }
    out.push_back(Step::feedback(phase));
  }
  out.push_back(Step::simple(StepType::SurveyPost));
  out.push_back(Step::simple(StepType::Done));
  return script;
}

std::vector<std::string> check_script_invariants(const StepScript& script) {
  std::vector<std::string> findings;
  const auto& steps = script.steps;
  const Condition c = script.condition;
  if (steps.size() < 3) {
    findings.emplace_back("script too short");
    return findings;
  }
  if (steps.front().type != StepType::Tutorial) findings.emplace_back("first step is not Tutorial");
  if (steps.back().type != StepType::Done) findings.emplace_back("last step is not Done");
  if (steps[steps.size() - 2].type != StepType::SurveyPost) {
    findings.emplace_back("SurveyPost does not precede Done");
  }

  int reveals = 0, quizzes = 0, advices = 0, feedbacks = 0;
  std::array<std::size_t, 4> next_slot{};  // per phase, index into kSlotOrder
  int current_phase = 1;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const Step& s = steps[i];
    if (s.has_phase()) {
      const int p = phase_index(s.phase);
      if (p < current_phase) findings.push_back("phase regresses at step " + std::to_string(i));
      current_phase = std::max(current_phase, p);
    }
    switch (s.type) {
      case StepType::RevealMessage: {
        ++reveals;
        auto& idx = next_slot[static_cast<std::size_t>(phase_index(s.phase))];
        if (idx >= kSlotOrder.size() || kSlotOrder[idx] != s.slot) {
          findings.push_back("reveal order broken at step " + std::to_string(i));
        }
        ++idx;
        const bool scammer = is_scammer_slot(s.slot);
        const Speaker want = c == Condition::Control
                                 ? (scammer ? Speaker::StaticA : Speaker::StaticB)
                                 : (scammer ? Speaker::Scammer : Speaker::Target);
        if (s.speaker != want) findings.push_back("wrong speaker at step " + std::to_string(i));
        break;
      }
      case StepType::Quiz: {
        ++quizzes;
        const int max_ord = script.cadence == QuizCadence::AfterEachScammerMessage ? 3 : 2;
        if (s.ordinal < 1 || s.ordinal > max_ord) {
          findings.push_back("quiz ordinal out of range at step " + std::to_string(i));
        }
        break;
      }
      case StepType::AdviceInput: {
        ++advices;
        if (s.ordinal < 1 || s.ordinal > 2) {
          findings.push_back("advice ordinal out of range at step " + std::to_string(i));
        }
        if (c == Condition::QuizAdvice &&
            (i == 0 || !(steps[i - 1] == Step::quiz(s.phase, s.ordinal)))) {
          findings.push_back("advice not immediately preceded by its quiz at step " +
                             std::to_string(i));
        }
        break;
      }
      case StepType::FeedbackSummary: {
        ++feedbacks;
        if (next_slot[static_cast<std::size_t>(phase_index(s.phase))] != kSlotOrder.size()) {
          findings.push_back("feedback before S3 at step " + std::to_string(i));
        }
        break;
      }
      case StepType::Tutorial:
        if (i != 0) findings.push_back("Tutorial not first");
        break;
      case StepType::SurveyPre:
        findings.emplace_back("SurveyPre belongs to the session flow, not the script");
        break;
      default:
        break;
    }
  }
  if (reveals != 15) findings.push_back("expected 15 reveals, got " + std::to_string(reveals));
  if (feedbacks != 3) findings.push_back("expected 3 feedback summaries, got " + std::to_string(feedbacks));
  if (!has_quiz(c) && quizzes != 0) findings.emplace_back("quiz steps in a quiz-free condition");
  if (!has_advice(c) && advices != 0) findings.emplace_back("advice steps in an advice-free condition");
  if (has_advice(c) && advices != 6) findings.push_back("expected 6 advice steps, got " + std::to_string(advices));
  if (has_quiz(c)) {
    const int want = script.cadence == QuizCadence::AfterEachScammerMessage ? 9 : 6;
    if (quizzes != want) {
      findings.push_back("expected " + std::to_string(want) + " quiz steps, got " +
                         std::to_string(quizzes));
    }
  }
  return findings;
}

std::vector<Step> session_flow(const StepScript& script) {
  std::vector<Step> flow;
  flow.reserve(script.steps.size() + 1);
  flow.push_back(Step::simple(StepType::SurveyPre));
  flow.insert(flow.end(), script.steps.begin(), script.steps.end());
  return flow;
}

const AdviceRecord* Session::find_advice(Phase phase, int ordinal) const {
  for (const auto& a : advice_log) {
    if (a.phase == phase && a.ordinal == ordinal) return &a;
  }
  return nullptr;
}

const QuizAttemptLog* Session::find_quiz(Phase phase, int ordinal) const {
  for (const auto& q : quiz_log) {
    if (q.phase == phase && q.ordinal == ordinal) return &q;
  }
  return nullptr;
}

Session make_session(std::string id, std::string participant_id, Condition condition,
                     QuizCadence cadence, std::uint64_t seed, Timestamp now) {
  Session s;
  s.id = std::move(id);
  s.participant_id = std::move(participant_id);
  s.condition = condition;
  s.cadence = cadence;
  s.seed = seed;
  s.steps = session_flow(build_step_script(condition, cadence));
  s.created_at = now;
  s.step_entered_at = now;
  s.events.push_back(TimedEvent{"created",
                                Json{{"condition", to_string(condition)},
                                     {"cadence", to_string(cadence)}},
                                now});
  return s;
}

std::string_view event_name(const SessionEvent& ev) {
  struct Visitor {
    std::string_view operator()(const event::SurveySubmitted&) const { return "SurveySubmitted"; }
    std::string_view operator()(const event::TutorialCompleted&) const { return "TutorialCompleted"; }
    std::string_view operator()(const event::MessageRevealed&) const { return "MessageRevealed"; }
    std::string_view operator()(const event::QuizSolved&) const { return "QuizSolved"; }
    std::string_view operator()(const event::AdviceSubmitted&) const { return "AdviceSubmitted"; }
    std::string_view operator()(const event::FeedbackDelivered&) const { return "FeedbackDelivered"; }
  };
  return std::visit(Visitor{}, ev);
}

Timestamp last_activity(const Session& session) {
  return session.events.empty() ? session.created_at : session.events.back().at;
}

void record_event(Session& session, std::string kind, Json payload, Timestamp at) {
  if (at < last_activity(session)) {
    fail(ErrorCode::NonMonotoneTimestamp, "event timestamp precedes the last recorded event");
  }
  session.events.push_back(TimedEvent{std::move(kind), std::move(payload), at});
}

namespace {

[[noreturn]] void out_of_order(const Session& s, const SessionEvent& ev) {
  fail(ErrorCode::OutOfOrderEvent, std::string(event_name(ev)) + " is not valid at step " +
                                       describe(s.current_step()));
}

void merge_responses(Json& into, const Json& from) {
  if (!from.is_object()) fail(ErrorCode::InvalidArgument, "survey responses must be an object");
  for (auto it = from.begin(); it != from.end(); ++it) {
    if (!it.value().is_object()) {
      fail(ErrorCode::InvalidArgument, "responses for '" + it.key() + "' must be an object");
    }
    Json& slot = into[it.key()];
    if (!slot.is_object()) slot = Json::object();
    for (auto item = it.value().begin(); item != it.value().end(); ++item) {
      slot[item.key()] = item.value();
    }
  }
}

}  // namespace

Session advance(Session s, const SessionEvent& ev, Timestamp at) {
  if (s.status != SessionStatus::Active) {
    fail(ErrorCode::SessionNotActive, "session " + s.id + " is " + std::string(to_string(s.status)));
  }
  if (at < last_activity(s)) {
    fail(ErrorCode::NonMonotoneTimestamp, "event timestamp precedes the last recorded event");
  }
  const Step step = s.current_step();

  if (const auto* e = std::get_if<event::SurveySubmitted>(&ev)) {
    const StepType want = e->stage == SurveyStage::Pre ? StepType::SurveyPre : StepType::SurveyPost;
    if (step.type != want) out_of_order(s, ev);
    merge_responses(s.survey_responses, e->responses);
  } else if (const auto* e = std::get_if<event::TutorialCompleted>(&ev)) {
    if (step.type != StepType::Tutorial) out_of_order(s, ev);
    merge_responses(s.survey_responses, e->responses);
  } else if (const auto* e = std::get_if<event::MessageRevealed>(&ev)) {
    const Message& m = e->message;
    if (step.type != StepType::RevealMessage || m.speaker != step.speaker ||
        m.phase != step.phase || m.slot != step.slot) {
      out_of_order(s, ev);
    }
    s.transcript.push_back(m);
    s.staged_message.reset();
  } else if (const auto* e = std::get_if<event::QuizSolved>(&ev)) {
    const QuizAttemptLog& log = e->log;
    if (step.type != StepType::Quiz || log.phase != step.phase || log.ordinal != step.ordinal) {
      out_of_order(s, ev);
    }
    if (!log.solved || log.attempts.empty()) {
      fail(ErrorCode::GateClosed, "quiz at " + describe(step) + " is not solved");
    }
    s.quiz_log.push_back(log);
    s.active_quiz.reset();
  } else if (const auto* e = std::get_if<event::AdviceSubmitted>(&ev)) {
    if (e->phase && e->ordinal && s.find_advice(*e->phase, *e->ordinal)) {
      fail(ErrorCode::DuplicateAdvice, "advice for phase " + std::to_string(phase_index(*e->phase)) +
                                           " ordinal " + std::to_string(*e->ordinal) +
                                           " already submitted");
    }
    if (step.type != StepType::AdviceInput) out_of_order(s, ev);
    if ((e->phase && *e->phase != step.phase) || (e->ordinal && *e->ordinal != step.ordinal)) {
      out_of_order(s, ev);
    }
    if (s.find_advice(step.phase, step.ordinal)) {
      fail(ErrorCode::DuplicateAdvice, "advice already recorded for " + describe(step));
    }
    if (s.condition == Condition::QuizAdvice) {
      const auto* quiz = s.find_quiz(step.phase, step.ordinal);
      if (!quiz || !quiz->solved) fail(ErrorCode::GateClosed, "paired quiz not solved");
    }
    const std::string text = trim(e->text);
    if (text.empty()) fail(ErrorCode::TextEmpty, "advice text is empty");
    s.advice_log.push_back(AdviceRecord{step.phase, step.ordinal, text, at, at - s.step_entered_at});
  } else if (const auto* e = std::get_if<event::FeedbackDelivered>(&ev)) {
    if (step.type != StepType::FeedbackSummary || e->record.phase != step.phase) {
      out_of_order(s, ev);
    }
    if (trim(e->record.narrative).empty()) {
      fail(ErrorCode::InvalidArgument, "feedback narrative is empty");
    }
    s.feedback_log.push_back(e->record);
    s.staged_feedback.reset();
  }

  s.events.push_back(TimedEvent{"step_completed",
                                Json{{"event", event_name(ev)},
                                     {"cursor", s.cursor},
                                     {"step", to_json(step)}},
                                at});
  s.cursor += 1;
  s.step_entered_at = at;
  if (s.current_step().type == StepType::Done) s.status = SessionStatus::Completed;
  return s;
}

bool mark_abandoned_if_idle(Session& session, Timestamp now, std::int64_t timeout_ms) {
  if (session.status != SessionStatus::Active) return false;
  if (now - last_activity(session) < timeout_ms) return false;
  session.status = SessionStatus::Abandoned;
  session.events.push_back(TimedEvent{"abandoned", Json{{"idle_ms", now - last_activity(session)}},
                                      std::max(now, last_activity(session))});
  return true;
}

SessionProgress session_progress(const Session& session) {
  SessionProgress p;
  p.step_index = session.cursor;
  p.steps_total = session.steps.empty() ? 0 : session.steps.size() - 1;
  p.percent = p.steps_total == 0 ? 1.0
                                 : static_cast<double>(p.step_index) /
                                       static_cast<double>(p.steps_total);
  bool found = false;
  for (std::size_t i = session.cursor; i < session.steps.size() && !found; ++i) {
    if (session.steps[i].has_phase()) {
      p.phase = session.steps[i].phase;
      found = true;
    }
  }
  for (std::size_t i = session.cursor; i-- > 0 && !found;) {
    if (session.steps[i].has_phase()) {
      p.phase = session.steps[i].phase;
      found = true;
    }
  }
  return p;
}

ConditionAllocator::ConditionAllocator(AllocatorMode mode, std::optional<std::uint64_t> seed)
    : mode_(mode), rng_(seed ? *seed : std::random_device{}()) {}

Condition ConditionAllocator::assign() {
  std::size_t pick = 0;
  if (mode_ == AllocatorMode::Uniform) {
    pick = static_cast<std::size_t>(rng_() % 4);
  } else {
    if (std::all_of(used_in_block_.begin(), used_in_block_.end(), [](bool b) { return b; })) {
      used_in_block_.fill(false);
    }
    std::vector<std::size_t> open;
    for (std::size_t i = 0; i < 4; ++i) {
      if (!used_in_block_[i]) open.push_back(i);
    }
    pick = open[static_cast<std::size_t>(rng_() % open.size())];
    used_in_block_[pick] = true;
  }
  counts_[pick] += 1;
  return kAllConditions[pick];
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

Json to_json(const Step& step) {
  Json j{{"type", to_string(step.type)}};
  switch (step.type) {
    case StepType::RevealMessage:
      j["speaker"] = to_string(step.speaker);
      j["phase"] = phase_index(step.phase);
      j["slot"] = to_string(step.slot);
      break;
    case StepType::Quiz:
    case StepType::AdviceInput:
      j["phase"] = phase_index(step.phase);
      j["ordinal"] = step.ordinal;
      break;
    case StepType::FeedbackSummary:
      j["phase"] = phase_index(step.phase);
      break;
    default:
      break;
  }
  return j;
}

Step step_from_json(const Json& j) {
  Step s;
  s.type = step_type_from_string(j.at("type").get<std::string>());
  if (j.contains("phase")) s.phase = phase_from_index(j.at("phase").get<int>());
  if (j.contains("speaker")) s.speaker = speaker_from_string(j.at("speaker").get<std::string>());
  if (j.contains("slot")) s.slot = slot_from_string(j.at("slot").get<std::string>());
  if (j.contains("ordinal")) s.ordinal = j.at("ordinal").get<int>();
  return s;
}

Json to_json(const Message& m) {
  return Json{{"speaker", to_string(m.speaker)}, {"phase", phase_index(m.phase)},
              {"slot", to_string(m.slot)},       {"text", m.text},
              {"origin", to_string(m.origin)},   {"timestamp", m.timestamp}};
}

Message message_from_json(const Json& j) {
  Message m;
  m.speaker = speaker_from_string(j.at("speaker").get<std::string>());
  m.phase = phase_from_index(j.at("phase").get<int>());
  m.slot = slot_from_string(j.at("slot").get<std::string>());
  m.text = j.at("text").get<std::string>();
  m.origin = origin_from_string(j.at("origin").get<std::string>());
  m.timestamp = j.at("timestamp").get<Timestamp>();
  return m;
}

Json to_json(const AdviceRecord& a) {
  return Json{{"phase", phase_index(a.phase)},
              {"ordinal", a.ordinal},
              {"text", a.text},
              {"submitted_at", a.submitted_at},
              {"elapsed_ms", a.elapsed_ms}};
}

namespace {

AdviceRecord advice_from_json(const Json& j) {
  return AdviceRecord{phase_from_index(j.at("phase").get<int>()), j.at("ordinal").get<int>(),
                      j.at("text").get<std::string>(), j.at("submitted_at").get<Timestamp>(),
                      j.at("elapsed_ms").get<std::int64_t>()};
}

}  // namespace

Json to_json(const QuizAttemptLog& q) {
  Json attempts = Json::array();
  for (const auto& a : q.attempts) attempts.push_back(Json{{"chosen_index", a.chosen_index}, {"at", a.at}});
  return Json{{"item_id", q.item_id},   {"phase", phase_index(q.phase)},
              {"ordinal", q.ordinal},   {"attempts", attempts},
              {"solved", q.solved},     {"elapsed_ms", q.elapsed_ms}};
}

QuizAttemptLog quiz_log_from_json(const Json& j) {
  QuizAttemptLog q;
  q.item_id = j.at("item_id").get<std::string>();
  q.phase = phase_from_index(j.at("phase").get<int>());
  q.ordinal = j.at("ordinal").get<int>();
  for (const auto& a : j.at("attempts")) {
    q.attempts.push_back(QuizAttempt{a.at("chosen_index").get<int>(), a.at("at").get<Timestamp>()});
  }
  q.solved = j.at("solved").get<bool>();
  q.elapsed_ms = j.at("elapsed_ms").get<std::int64_t>();
  return q;
}

Json to_json(const FeedbackRecord& f) {
  return Json{{"phase", phase_index(f.phase)},
              {"verdict", to_string(f.verdict)},
              {"narrative", f.narrative},
              {"next_phase_preview", f.next_phase_preview},
              {"generated", f.generated}};
}

FeedbackRecord feedback_from_json(const Json& j) {
  FeedbackRecord f;
  f.phase = phase_from_index(j.at("phase").get<int>());
  f.verdict = parse_enum(j.at("verdict").get<std::string>(), kVerdicts, "verdict");
  f.narrative = j.at("narrative").get<std::string>();
  f.next_phase_preview = j.at("next_phase_preview").get<std::string>();
  f.generated = j.at("generated").get<bool>();
  return f;
}

Json to_json(const Session& s) {
  Json steps = Json::array();
  for (const auto& st : s.steps) steps.push_back(to_json(st));
  Json transcript = Json::array();
  for (const auto& m : s.transcript) transcript.push_back(to_json(m));
  Json advice = Json::array();
  for (const auto& a : s.advice_log) advice.push_back(to_json(a));
  Json quiz = Json::array();
  for (const auto& q : s.quiz_log) quiz.push_back(to_json(q));
  Json feedback = Json::array();
  for (const auto& f : s.feedback_log) feedback.push_back(to_json(f));
  Json events = Json::array();
  for (const auto& e : s.events) {
    events.push_back(Json{{"kind", e.kind}, {"payload", e.payload}, {"at", e.at}});
  }
  return Json{
      {"id", s.id},
      {"participant_id", s.participant_id},
      {"condition", to_string(s.condition)},
      {"cadence", to_string(s.cadence)},
      {"seed", s.seed},
      {"status", to_string(s.status)},
      {"cursor", s.cursor},
      {"created_at", s.created_at},
      {"step_entered_at", s.step_entered_at},
      {"steps", steps},
      {"transcript", transcript},
      {"advice_log", advice},
      {"quiz_log", quiz},
      {"feedback_log", feedback},
      {"survey_responses", s.survey_responses},
      {"active_quiz", s.active_quiz ? to_json(*s.active_quiz) : Json(nullptr)},
      {"staged_message", s.staged_message ? to_json(*s.staged_message) : Json(nullptr)},
      {"staged_feedback", s.staged_feedback ? to_json(*s.staged_feedback) : Json(nullptr)},
      {"events", events},
  };
}

Session session_from_json(const Json& j) {
  try {
    Session s;
    s.id = j.at("id").get<std::string>();
    s.participant_id = j.at("participant_id").get<std::string>();
    s.condition = condition_from_string(j.at("condition").get<std::string>());
    s.cadence = cadence_from_string(j.at("cadence").get<std::string>());
    s.seed = j.at("seed").get<std::uint64_t>();
    s.status = parse_enum(j.at("status").get<std::string>(), kStatuses, "status");
    s.cursor = j.at("cursor").get<std::size_t>();
    s.created_at = j.at("created_at").get<Timestamp>();
    s.step_entered_at = j.at("step_entered_at").get<Timestamp>();
    for (const auto& st : j.at("steps")) s.steps.push_back(step_from_json(st));
    for (const auto& m : j.at("transcript")) s.transcript.push_back(message_from_json(m));
    for (const auto& a : j.at("advice_log")) s.advice_log.push_back(advice_from_json(a));
    for (const auto& q : j.at("quiz_log")) s.quiz_log.push_back(quiz_log_from_json(q));
    for (const auto& f : j.at("feedback_log")) s.feedback_log.push_back(feedback_from_json(f));
    s.survey_responses = j.at("survey_responses");
    if (!j.at("active_quiz").is_null()) s.active_quiz = quiz_log_from_json(j.at("active_quiz"));
    if (!j.at("staged_message").is_null()) s.staged_message = message_from_json(j.at("staged_message"));
    if (!j.at("staged_feedback").is_null()) s.staged_feedback = feedback_from_json(j.at("staged_feedback"));
    for (const auto& e : j.at("events")) {
      s.events.push_back(TimedEvent{e.at("kind").get<std::string>(), e.at("payload"),
                                    e.at("at").get<Timestamp>()});
    }
    if (s.steps.empty() || s.cursor >= s.steps.size()) {
      fail(ErrorCode::ParseError, "session cursor outside its step list");
    }
    return s;
  } catch (const Json::exception& ex) {
    fail(ErrorCode::ParseError, std::string("malformed session document: ") + ex.what());
  }
}

std::string serialize_session(const Session& s) { return to_json(s).dump(); }

}  // namespace scamsim
