#pragma once

#include <random>
#include <string>
#include <vector>

#include "scamsim/assessment.hpp"
#include "scamsim/orchestrator.hpp"
#include "scamsim/pack.hpp"
#include "scamsim/provider.hpp"
#include "scamsim/session.hpp"

namespace testutil {

using namespace scamsim;

inline const PromptPack& default_pack() {
  static const PromptPack pack = load_pack(SCAMSIM_PACK_DIR);
  return pack;
}

/// Valid answers for every item administered at `stage`; attention checks answered correctly.
inline Json synthetic_responses(const std::vector<InstrumentDef>& instruments, SurveyPhase stage,
                                std::mt19937_64& rng) {
  Json out = Json::object();
  for (const auto& def : instruments) {
    Json answers = Json::object();
    for (const auto& item : def.items) {
      if (stage_of(def, item) != stage) continue;
      switch (item.scale) {
        case Scale::Likert5: answers[item.id] = static_cast<int>(rng() % 5) + 1; break;
        case Scale::Likert7: answers[item.id] = static_cast<int>(rng() % 7) + 1; break;
        case Scale::FreeText: answers[item.id] = "no comment"; break;
        case Scale::Choice:
          answers[item.id] = item.correct_option.empty() ? item.options.at(rng() % item.options.size())
                                                         : item.correct_option;
          break;
      }
      if (item.justification) answers[item.id + "_why"] = "because";
    }
    if (!answers.empty()) out[std::string(to_string(def.key))] = answers;
  }
  return out;
}

inline std::vector<std::string> default_advice() {
  return {"Ask him a question only the real Daniel would know.",
          "Call his parents before doing anything.",
          "Say you will call back on his old number.",
          "Do not send money or gift cards.",
          "Hang up and call the police station yourself.",
          "Tell him no, a real lawyer never asks for gift cards."};
}

/// Applies the next step of a session at the core level: static or generated
/// reveals, quizzes answered correctly, advice taken from `advice` in order.
inline Session step_once(Session s, CompletionProvider& provider, const PromptPack& pack,
                         const std::vector<std::string>& advice, Timestamp& t, std::mt19937_64& rng) {
  const Step step = s.current_step();
  t += 1000;
  switch (step.type) {
    case StepType::SurveyPre:
      return advance(std::move(s),
                     event::SurveySubmitted{SurveyStage::Pre, synthetic_responses(pack.instruments, SurveyPhase::Pre, rng)},
                     t);
    case StepType::Tutorial:
      return advance(std::move(s),
                     event::TutorialCompleted{synthetic_responses(pack.instruments, SurveyPhase::Tutorial, rng)}, t);
    case StepType::RevealMessage: {
      auto r = produce_reveal(s, provider, pack, t);
      return advance(std::move(s), event::MessageRevealed{r.message}, t);
    }
    case StepType::Quiz: {
      const QuizItem* item = find_quiz_item(pack.quiz_bank, step.phase, step.ordinal);
      submit_answer(s, *item, item->correct_index, t);
      return s;
    }
    case StepType::AdviceInput:
      return advance(std::move(s), event::AdviceSubmitted{advice.at(s.advice_log.size() % advice.size())}, t);
    case StepType::FeedbackSummary: {
      auto f = generate_feedback(s, step.phase, provider, pack);
      return advance(std::move(s), event::FeedbackDelivered{f.record}, t);
    }
    case StepType::SurveyPost:
      return advance(std::move(s),
                     event::SurveySubmitted{SurveyStage::Post, synthetic_responses(pack.instruments, SurveyPhase::Post, rng)},
                     t);
    case StepType::Done:
      break;
  }
  return s;
}

/// Plays a session to completion.
inline Session drive(Session s, CompletionProvider& provider, const PromptPack& pack,
                     const std::vector<std::string>& advice, Timestamp& t, std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  while (s.status == SessionStatus::Active) s = step_once(std::move(s), provider, pack, advice, t, rng);
  return s;
}

/// Steps until `stop` holds for the session or it completes.
template <typename Pred>
Session drive_until(Session s, CompletionProvider& provider, const PromptPack& pack,
                    const std::vector<std::string>& advice, Timestamp& t, Pred stop) {
  std::mt19937_64 rng(1);
  while (s.status == SessionStatus::Active && !stop(s)) s = step_once(std::move(s), provider, pack, advice, t, rng);
  return s;
}

}  // namespace testutil
