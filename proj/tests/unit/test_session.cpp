#include <doctest.h>

#include <algorithm>
#include <map>

#include "helpers.hpp"
#include "scamsim/error.hpp"
#include "scamsim/session.hpp"

using namespace scamsim;

namespace {

int count_type(const std::vector<Step>& steps, StepType t) {
  return static_cast<int>(std::count_if(steps.begin(), steps.end(), [t](const Step& s) { return s.type == t; }));
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Ok;
}

// Session positioned at the first step of type `t`, with everything before it skipped.
Session at_first(Condition c, StepType t, QuizCadence cadence = QuizCadence::BeforeEachAdvice) {
  Session s = make_session("s1", "p1", c, cadence, 7, 1000);
  const auto it = std::find_if(s.steps.begin(), s.steps.end(), [t](const Step& st) { return st.type == t; });
  REQUIRE(it != s.steps.end());
  s.cursor = static_cast<std::size_t>(it - s.steps.begin());
  return s;
}

SessionEvent sample_event(std::size_t kind, const Step& step) {
  switch (kind) {
    case 0: return event::SurveySubmitted{SurveyStage::Pre, Json::object()};
    case 1: return event::SurveySubmitted{SurveyStage::Post, Json::object()};
    case 2: return event::TutorialCompleted{};
    case 3: {
      Message m;
      m.speaker = step.speaker;
      m.phase = step.phase;
      m.slot = step.slot;
      m.text = "hello";
      return event::MessageRevealed{m};
    }
    case 4: {
      QuizAttemptLog log{"q", step.phase, step.ordinal, {{0, 1}}, true, 10};
      return event::QuizSolved{log};
    }
    case 5: return event::AdviceSubmitted{"be careful"};
    default: {
      FeedbackRecord f;
      f.phase = step.phase;
      f.narrative = "ok";
      return event::FeedbackDelivered{f};
    }
  }
}

// Which sample event kind a step accepts.
std::optional<std::size_t> accepted_kind(const Step& step) {
  switch (step.type) {
    case StepType::SurveyPre: return 0;
    case StepType::SurveyPost: return 1;
    case StepType::Tutorial: return 2;
    case StepType::RevealMessage: return 3;
    case StepType::Quiz: return 4;
    case StepType::AdviceInput: return 5;
    case StepType::FeedbackSummary: return 6;
    case StepType::Done: return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace

TEST_CASE("step scripts satisfy their invariants for every condition and cadence") {
  for (Condition c : kAllConditions) {
    for (QuizCadence cad : {QuizCadence::BeforeEachAdvice, QuizCadence::AfterEachScammerMessage}) {
      CAPTURE(to_string(c));
      CAPTURE(to_string(cad));
      const auto script = build_step_script(c, cad);
      CHECK(check_script_invariants(script).empty());
      CHECK(script.steps.front().type == StepType::Tutorial);
      CHECK(script.steps[script.steps.size() - 2].type == StepType::SurveyPost);
      CHECK(script.steps.back().type == StepType::Done);
      CHECK(count_type(script.steps, StepType::RevealMessage) == 15);
      CHECK(count_type(script.steps, StepType::FeedbackSummary) == 3);
      CHECK(count_type(script.steps, StepType::AdviceInput) == (has_advice(c) ? 6 : 0));
      const int quizzes = has_quiz(c) ? (cad == QuizCadence::BeforeEachAdvice ? 6 : 9) : 0;
      CHECK(count_type(script.steps, StepType::Quiz) == quizzes);

      // Per phase the reveals run S1, T1, S2, T2, S3.
      std::map<int, std::vector<Slot>> slots;
      for (const auto& s : script.steps) {
        if (s.type == StepType::RevealMessage) slots[phase_index(s.phase)].push_back(s.slot);
      }
      for (auto& [p, v] : slots) CHECK(v == std::vector<Slot>(kSlotOrder.begin(), kSlotOrder.end()));

      // Quiz(p,k) sits immediately before AdviceInput(p,k).
      if (c == Condition::QuizAdvice) {
        for (std::size_t i = 0; i < script.steps.size(); ++i) {
          if (script.steps[i].type != StepType::AdviceInput) continue;
          REQUIRE(i > 0);
          CHECK(script.steps[i - 1] == Step::quiz(script.steps[i].phase, script.steps[i].ordinal));
        }
      }
    }
  }
}

TEST_CASE("control and advice scripts have the documented step counts") {
  const auto control = build_step_script(Condition::Control);
  CHECK(count_type(control.steps, StepType::RevealMessage) == 15);
  CHECK(count_type(control.steps, StepType::FeedbackSummary) == 3);
  CHECK(count_type(control.steps, StepType::Quiz) == 0);
  CHECK(count_type(control.steps, StepType::AdviceInput) == 0);
  for (const auto& s : control.steps) {
    if (s.type == StepType::RevealMessage) CHECK((s.speaker == Speaker::StaticA || s.speaker == Speaker::StaticB));
  }
  const auto advice = build_step_script(Condition::Advice);
  CHECK(count_type(advice.steps, StepType::AdviceInput) == 6);
  CHECK(count_type(advice.steps, StepType::Quiz) == 0);
}

TEST_CASE("the advice window follows S1 and precedes T1") {
  const auto script = build_step_script(Condition::Advice);
  std::vector<Step> phase1;
  for (const auto& s : script.steps) {
    if (s.has_phase() && s.phase == Phase::TrustBuilding) phase1.push_back(s);
  }
  REQUIRE(phase1.size() >= 3);
  CHECK(phase1[0] == Step::reveal(Speaker::Scammer, Phase::TrustBuilding, Slot::S1));
  CHECK(phase1[1] == Step::advice(Phase::TrustBuilding, 1));
  CHECK(phase1[2] == Step::reveal(Speaker::Target, Phase::TrustBuilding, Slot::T1));
}

TEST_CASE("invariant checker reports broken scripts") {
  auto script = build_step_script(Condition::QuizAdvice);
  auto broken = script;
  broken.steps.erase(broken.steps.begin() + 1);
  CHECK_FALSE(check_script_invariants(broken).empty());

  auto no_done = script;
  no_done.steps.pop_back();
  CHECK_FALSE(check_script_invariants(no_done).empty());

  auto swapped = script;
  const auto quiz = std::find_if(swapped.steps.begin(), swapped.steps.end(),
                                 [](const Step& s) { return s.type == StepType::Quiz; });
  std::iter_swap(quiz, quiz + 1);
  CHECK_FALSE(check_script_invariants(swapped).empty());
}

TEST_CASE("advice at a quiz step is out of order") {
  Session s = at_first(Condition::QuizAdvice, StepType::Quiz);
  REQUIRE(s.current_step() == Step::quiz(Phase::TrustBuilding, 1));
  CHECK(code_of([&] { advance(s, event::AdviceSubmitted{"call his parents"}, 2000); }) ==
        ErrorCode::OutOfOrderEvent);
}

TEST_CASE("every event kind is accepted only at its own step kind") {
  for (Condition c : kAllConditions) {
    for (QuizCadence cad : {QuizCadence::BeforeEachAdvice, QuizCadence::AfterEachScammerMessage}) {
      Session base = make_session("s", "p", c, cad, 3, 0);
      for (std::size_t i = 0; i + 1 < base.steps.size(); ++i) {
        Session s = base;
        s.cursor = i;
        // Gated advice needs the paired quiz already solved.
        if (c == Condition::QuizAdvice && s.steps[i].type == StepType::AdviceInput) {
          s.quiz_log.push_back(QuizAttemptLog{"q", s.steps[i].phase, s.steps[i].ordinal, {{0, 0}}, true, 0});
        }
        const Step step = s.current_step();
        for (std::size_t kind = 0; kind < 7; ++kind) {
          CAPTURE(describe(step));
          CAPTURE(kind);
          const auto ev = sample_event(kind, step);
          if (accepted_kind(step) == kind) {
            const Session next = advance(s, ev, 10);
            CHECK(next.cursor == i + 1);
            CHECK(next.events.back().kind == "step_completed");
          } else {
            CHECK(code_of([&] { advance(s, ev, 10); }) == ErrorCode::OutOfOrderEvent);
          }
        }
      }
    }
  }
}

TEST_CASE("reveal must match speaker, phase and slot") {
  Session s = at_first(Condition::Advice, StepType::RevealMessage);
  Message m;
  m.speaker = Speaker::Target;
  m.phase = Phase::TrustBuilding;
  m.slot = Slot::S1;
  m.text = "x";
  CHECK(code_of([&] { advance(s, event::MessageRevealed{m}, 2000); }) == ErrorCode::OutOfOrderEvent);
  m.speaker = Speaker::Scammer;
  m.slot = Slot::T1;
  CHECK(code_of([&] { advance(s, event::MessageRevealed{m}, 2000); }) == ErrorCode::OutOfOrderEvent);
  m.slot = Slot::S1;
  m.phase = Phase::Manipulation;
  CHECK(code_of([&] { advance(s, event::MessageRevealed{m}, 2000); }) == ErrorCode::OutOfOrderEvent);
  m.phase = Phase::TrustBuilding;
  s.staged_message = m;
  const auto next = advance(s, event::MessageRevealed{m}, 2000);
  CHECK(next.transcript.size() == 1);
  CHECK_FALSE(next.staged_message.has_value());
}

TEST_CASE("advice errors") {
  SUBCASE("empty text") {
    Session s = at_first(Condition::Advice, StepType::AdviceInput);
    CHECK(code_of([&] { advance(s, event::AdviceSubmitted{"   "}, 2000); }) == ErrorCode::TextEmpty);
  }
  SUBCASE("gate closed without a solved quiz") {
    Session s = at_first(Condition::QuizAdvice, StepType::AdviceInput);
    CHECK(code_of([&] { advance(s, event::AdviceSubmitted{"ok"}, 2000); }) == ErrorCode::GateClosed);
  }
  SUBCASE("duplicate advice for the same phase and ordinal") {
    Session s = at_first(Condition::Advice, StepType::AdviceInput);
    s = advance(s, event::AdviceSubmitted{"first"}, 2000);
    event::AdviceSubmitted again{"second", Phase::TrustBuilding, 1};
    CHECK(code_of([&] { advance(s, again, 3000); }) == ErrorCode::DuplicateAdvice);
  }
  SUBCASE("elapsed time is measured from entering the step") {
    Session s = at_first(Condition::Advice, StepType::AdviceInput);
    s.step_entered_at = 1500;
    s = advance(s, event::AdviceSubmitted{"  trimmed  "}, 4000);
    REQUIRE(s.advice_log.size() == 1);
    CHECK(s.advice_log[0].text == "trimmed");
    CHECK(s.advice_log[0].elapsed_ms == 2500);
  }
}

TEST_CASE("timestamps must not go backwards and inactive sessions reject events") {
  Session s = make_session("s", "p", Condition::Control, QuizCadence::BeforeEachAdvice, 1, 5000);
  CHECK(code_of([&] { advance(s, event::SurveySubmitted{}, 4999); }) == ErrorCode::NonMonotoneTimestamp);
  CHECK(code_of([&] { record_event(s, "x", Json::object(), 10); }) == ErrorCode::NonMonotoneTimestamp);
  record_event(s, "x", Json::object(), 5000);
  CHECK(s.events.size() == 2);

  CHECK(mark_abandoned_if_idle(s, 6000, 5000) == false);
  CHECK(mark_abandoned_if_idle(s, 10000, 5000) == true);
  CHECK(s.status == SessionStatus::Abandoned);
  CHECK(mark_abandoned_if_idle(s, 20000, 5000) == false);
  CHECK(code_of([&] { advance(s, event::SurveySubmitted{}, 30000); }) == ErrorCode::SessionNotActive);
}

TEST_CASE("progress") {
  Session fresh = make_session("s", "p", Condition::QuizAdvice, QuizCadence::BeforeEachAdvice, 1, 0);
  auto p = session_progress(fresh);
  CHECK(p.percent == 0.0);
  CHECK(p.phase == Phase::TrustBuilding);

  Session last = fresh;
  last.cursor = last.steps.size() - 1;
  CHECK(session_progress(last).percent == 1.0);
  CHECK(session_progress(last).phase == Phase::Extraction);

  Session synthetic;
  synthetic.steps.assign(31, Step::simple(StepType::Tutorial));
  synthetic.cursor = 15;
  CHECK(session_progress(synthetic).percent == doctest::Approx(0.5));

  // Progress never decreases along the script.
  double prev = -1.0;
  for (std::size_t i = 0; i < fresh.steps.size(); ++i) {
    Session s = fresh;
    s.cursor = i;
    const auto q = session_progress(s);
    CHECK(q.percent >= prev);
    CHECK(q.percent <= 1.0);
    prev = q.percent;
  }
}

TEST_CASE("balanced allocator fills each block of four") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    ConditionAllocator a(AllocatorMode::BalancedBlock, seed);
    for (int block = 1; block <= 5; ++block) {
      for (int i = 0; i < 4; ++i) a.assign();
      for (int c : a.counts()) CHECK(c == block);
    }
    a.assign();
    const auto [lo, hi] = std::minmax_element(a.counts().begin(), a.counts().end());
    CHECK(*hi - *lo <= 1);
  }
}

TEST_CASE("uniform allocator is reproducible and roughly uniform") {
  ConditionAllocator a(AllocatorMode::Uniform, 42), b(AllocatorMode::Uniform, 42);
  for (int i = 0; i < 50; ++i) CHECK(a.assign() == b.assign());

  ConditionAllocator u(AllocatorMode::Uniform, 2024);
  for (int i = 0; i < 10000; ++i) u.assign();
  double chi2 = 0.0;
  for (int c : u.counts()) {
    const double freq = c / 10000.0;
    CHECK(freq >= 0.22);
    CHECK(freq <= 0.28);
    chi2 += (c - 2500.0) * (c - 2500.0) / 2500.0;
  }
  // 99.9th percentile of chi-square with 3 df.
  CHECK(chi2 < 16.266);
}

TEST_CASE("completed sessions have the expected record counts") {
  const auto& pack = testutil::default_pack();
  ScriptedProvider provider(pack.scripted_fixtures);
  for (Condition c : kAllConditions) {
    CAPTURE(to_string(c));
    Timestamp t = 1000;
    Session s = make_session("s", "p", c, QuizCadence::BeforeEachAdvice, 9, t);
    s = testutil::drive(std::move(s), provider, pack, testutil::default_advice(), t);
    CHECK(s.status == SessionStatus::Completed);
    CHECK(s.transcript.size() == 15);
    CHECK(s.feedback_log.size() == 3);
    CHECK(s.advice_log.size() == (has_advice(c) ? 6u : 0u));
    CHECK(s.quiz_log.size() == (has_quiz(c) ? 6u : 0u));
    for (const auto& m : s.transcript) {
      CHECK(m.origin == (is_dynamic(c) ? Origin::Generated : Origin::StaticFixture));
    }
    // Gating soundness: every advice record has its solved quiz.
    if (c == Condition::QuizAdvice) {
      for (const auto& a : s.advice_log) {
        const auto* q = s.find_quiz(a.phase, a.ordinal);
        REQUIRE(q != nullptr);
        CHECK(q->solved);
      }
    }
    // Timestamps are monotone.
    for (std::size_t i = 1; i < s.events.size(); ++i) CHECK(s.events[i].at >= s.events[i - 1].at);
  }
}

TEST_CASE("session serialization round-trips byte for byte") {
  const auto& pack = testutil::default_pack();
  ScriptedProvider provider(pack.scripted_fixtures);
  Timestamp t = 1000;
  Session s = make_session("abc", "p9", Condition::QuizAdvice, QuizCadence::AfterEachScammerMessage, 77, t);
  s = testutil::drive(std::move(s), provider, pack, testutil::default_advice(), t);
  const std::string bytes = serialize_session(s);
  const Session back = session_from_json(Json::parse(bytes));
  CHECK(serialize_session(back) == bytes);
  CHECK(back.quiz_log.size() == 9);

  // Mid-session state with staged content survives too.
  Session mid = make_session("m", "p", Condition::Advice, QuizCadence::BeforeEachAdvice, 5, 0);
  mid.staged_message = Message{Speaker::Scammer, Phase::TrustBuilding, Slot::S1, "hi", Origin::Generated, 3};
  mid.staged_feedback = FeedbackRecord{Phase::Manipulation, Verdict::Unhelpful, "n", "p", true};
  const std::string mid_bytes = serialize_session(mid);
  CHECK(serialize_session(session_from_json(Json::parse(mid_bytes))) == mid_bytes);
}

TEST_CASE("enum string forms round-trip") {
  for (Condition c : kAllConditions) CHECK(condition_from_string(to_string(c)) == c);
  for (StepType t : kAllStepTypes) CHECK(step_type_from_string(to_string(t)) == t);
  for (Slot s : kSlotOrder) CHECK(slot_from_string(to_string(s)) == s);
  for (Speaker s : {Speaker::Scammer, Speaker::Target, Speaker::StaticA, Speaker::StaticB}) {
    CHECK(speaker_from_string(to_string(s)) == s);
  }
  for (int i = 1; i <= 3; ++i) CHECK(phase_index(phase_from_index(i)) == i);
  CHECK(code_of([] { phase_from_index(4); }) != ErrorCode::Ok);
  CHECK(code_of([] { condition_from_string("placebo"); }) == ErrorCode::InvalidArgument);
}
