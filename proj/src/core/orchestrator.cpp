#include "scamsim/orchestrator.hpp"

#include <algorithm>
#include <regex>

#include "scamsim/error.hpp"
#include "scamsim/text.hpp"

namespace scamsim {

namespace {

constexpr const char* kAdviceLabel = "User advice";

bool is_dialogue(const Message& m) { return m.speaker == Speaker::Scammer || m.speaker == Speaker::Target; }

VisibleMessage visible(const PromptPack& pack, const Message& m, Speaker self) {
  return VisibleMessage{pack.label_for(m.speaker), m.text, VisibleKind::Dialogue, m.speaker == self};
}

std::string history_text(const std::vector<VisibleMessage>& messages) {
  std::vector<std::string> lines;
  lines.reserve(messages.size());
  for (const auto& m : messages) lines.push_back(m.speaker_label + ": " + m.text);
  return join(lines, "\n");
}

// Feedback view: the transcript with each advice placed right after the scammer
// message it answered (A1 after S1, A2 after S2).
std::vector<VisibleMessage> feedback_messages(const Session& session, const PromptPack& pack,
                                              std::optional<Phase> only_phase) {
  std::vector<VisibleMessage> out;
  for (const auto& m : session.transcript) {
    if (only_phase && m.phase != *only_phase) continue;
    out.push_back(visible(pack, m, Speaker::Scammer));
    out.back().own = false;
    if (m.slot == Slot::S1 || m.slot == Slot::S2) {
      const int ord = m.slot == Slot::S1 ? 1 : 2;
      if (const auto* a = session.find_advice(m.phase, ord)) {
        out.push_back(VisibleMessage{kAdviceLabel, a->text, VisibleKind::Advice, false});
      }
    }
  }
  return out;
}

}  // namespace

Bindings bindings_for(const PromptTemplate& t, const PromptPack& pack, const std::string& history) {
  Bindings dynamic{{"phase_name", std::string(display_name(t.phase))},
                   {"phase_number", std::to_string(phase_index(t.phase))},
                   {"history", history}};
  Bindings out;
  for (const auto& slot : t.slots) {
    if (auto it = dynamic.find(slot); it != dynamic.end()) {
      out.emplace(slot, it->second);
    } else if (auto jt = pack.bindings.find(slot); jt != pack.bindings.end()) {
      out.emplace(slot, jt->second);
    }
  }
  return out;
}

ContextWindow scope_history(AgentRole role, const Session& session, Phase phase,
                            const std::optional<AdviceRecord>& pending_advice, const PromptPack& pack,
                            std::optional<Slot> slot, const OrchestratorOptions& options) {
  if (pending_advice && role != AgentRole::Target) {
    fail(ErrorCode::AdviceForNonTarget, "pending advice is only handed to the target");
  }
  if (pending_advice && pending_advice->phase != phase) {
    fail(ErrorCode::PhaseMismatch, "advice from phase " + std::to_string(phase_index(pending_advice->phase)) +
                                       " offered in phase " + std::to_string(phase_index(phase)));
  }
  const PromptTemplate* t = pack.find_template(role, phase);
  if (!t) {
    fail(ErrorCode::MissingTemplate, "no template for (" + std::string(to_string(role)) + ", " +
                                         std::to_string(phase_index(phase)) + ")");
  }

  ContextWindow w;
  w.role = role;
  w.phase = phase;
  w.slot = slot;
  if (role == AgentRole::FeedbackAgent) {
    w.visible_messages =
        feedback_messages(session, pack, options.feedback_whole_session ? std::nullopt : std::optional(phase));
  } else {
    const Speaker self = role == AgentRole::Scammer ? Speaker::Scammer : Speaker::Target;
    for (const auto& m : session.transcript) {
      if (is_dialogue(m)) w.visible_messages.push_back(visible(pack, m, self));
    }
    if (role == AgentRole::Target && pending_advice) {
      w.pending_advice = pending_advice->text;
      w.advice_framing = pack.advice_framing;
    }
  }
  w.system_prompt = render_prompt(*t, bindings_for(*t, pack, history_text(w.visible_messages)));
  return w;
}

std::pair<PromptTemplate, PromptTemplate> switch_phase_prompts(const PromptPack& pack, Phase phase) {
  const PromptTemplate* s = pack.find_template(AgentRole::Scammer, phase);
  const PromptTemplate* t = pack.find_template(AgentRole::Target, phase);
  if (!s || !t) {
    fail(ErrorCode::MissingTemplate, "pack lacks the (" + std::string(s ? "target" : "scammer") + ", " +
                                         std::to_string(phase_index(phase)) + ") template");
  }
  return {*s, *t};
}

bool matches_refusal(const std::string& text, const std::vector<std::string>& patterns) {
  for (const auto& p : patterns) {
    const std::regex re(p, std::regex::ECMAScript | std::regex::icase);
    if (std::regex_search(text, re)) return true;
  }
  return false;
}

Json to_json(const Incident& i) {
  return Json{{"kind", i.kind}, {"attempt", i.attempt}, {"detail", i.detail}};
}

namespace {

std::string call_provider(CompletionProvider& provider, const ContextWindow& w, const GenerationParams& params) {
  try {
    return provider.generate(w, params);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& ex) {
    fail(ErrorCode::ProviderError, std::string("provider failed: ") + ex.what());
  }
}

std::string generate_with_refusal_policy(CompletionProvider& provider, const ContextWindow& w,
                                         const PromptPack& pack, const OrchestratorOptions& options,
                                         std::vector<Incident>& incidents) {
  const auto params = GenerationParams::defaults_for(w.role);
  const int retries = options.refusal_retries.value_or(pack.refusal_retries);
  for (int attempt = 1; attempt <= retries + 1; ++attempt) {
    std::string text = trim(call_provider(provider, w, params));
    if (text.empty()) fail(ErrorCode::EmptyCompletion, "provider returned an empty completion");
    if (!matches_refusal(text, pack.refusal_patterns)) return text;
    incidents.push_back(Incident{"refusal", attempt, text});
  }
  if (options.refusal_fallback) {
    if (auto fb = pack.fallback_for(w.role, w.phase, w.slot)) {
      incidents.push_back(Incident{"fallback", retries + 1, *fb});
      return *fb;
    }
  }
  fail(ErrorCode::RefusalDetected, "provider refused " + std::to_string(retries + 1) + " time(s)");
}

const Step& reveal_step(const Session& session) {
  if (session.status != SessionStatus::Active) fail(ErrorCode::SessionNotActive, "session is not active");
  const Step& step = session.current_step();
  if (step.type != StepType::RevealMessage) {
    fail(ErrorCode::OutOfOrderEvent, "no message is due at " + describe(step));
  }
  return step;
}

}  // namespace

TurnResult generate_scammer_turn(const Session& session, CompletionProvider& provider, const PromptPack& pack,
                                 Timestamp now, const OrchestratorOptions& options) {
  const Step& step = reveal_step(session);
  if (step.speaker != Speaker::Scammer) {
    fail(ErrorCode::OutOfOrderEvent, "next message is not a scammer turn: " + describe(step));
  }
  TurnResult r;
  r.window = scope_history(AgentRole::Scammer, session, step.phase, std::nullopt, pack, step.slot, options);
  const std::string text = generate_with_refusal_policy(provider, r.window, pack, options, r.incidents);
  r.message = Message{Speaker::Scammer, step.phase, step.slot, text, Origin::Generated, now};
  return r;
}

TurnResult generate_target_turn(const Session& session, const std::optional<AdviceRecord>& advice,
                                CompletionProvider& provider, const PromptPack& pack, Timestamp now,
                                const OrchestratorOptions& options) {
  const Step& step = reveal_step(session);
  if (step.speaker != Speaker::Target) {
    fail(ErrorCode::OutOfOrderEvent, "next message is not a target turn: " + describe(step));
  }
  if (step.slot == Slot::S3) fail(ErrorCode::OutOfOrderEvent, "target turns occupy T1 and T2 only");
  TurnResult r;
  r.window = scope_history(AgentRole::Target, session, step.phase, advice, pack, step.slot, options);
  const std::string text = generate_with_refusal_policy(provider, r.window, pack, options, r.incidents);
  r.message = Message{Speaker::Target, step.phase, step.slot, text, Origin::Generated, now};
  return r;
}

TurnResult generate_target_turn(const Session& session, CompletionProvider& provider, const PromptPack& pack,
                                Timestamp now, const OrchestratorOptions& options) {
  const Step& step = reveal_step(session);
  std::optional<AdviceRecord> advice;
  if (step.speaker == Speaker::Target && step.slot != Slot::S3) {
    if (const auto* a = session.find_advice(step.phase, target_slot_ordinal(step.slot))) advice = *a;
  }
  return generate_target_turn(session, advice, provider, pack, now, options);
}

Message static_message(const PromptPack& pack, Condition condition, Phase phase, Slot slot, Timestamp now) {
  const StaticTurn& t = static_turn(pack, condition, phase, slot);
  return Message{t.speaker, phase, slot, t.text, Origin::StaticFixture, now};
}

TurnResult produce_reveal(const Session& session, CompletionProvider& provider, const PromptPack& pack,
                          Timestamp now, const OrchestratorOptions& options) {
  const Step& step = reveal_step(session);
  if (!is_dynamic(session.condition)) {
    TurnResult r;
    r.message = static_message(pack, session.condition, step.phase, step.slot, now);
    return r;
  }
  if (step.speaker == Speaker::Scammer) return generate_scammer_turn(session, provider, pack, now, options);
  return generate_target_turn(session, provider, pack, now, options);
}

std::optional<FeedbackRecord> parse_feedback_output(const std::string& text, Phase phase) {
  const auto lines = split(text, '\n');
  std::size_t i = 0;
  while (i < lines.size() && trim(lines[i]).empty()) ++i;
  if (i == lines.size()) return std::nullopt;
  const std::string head = trim(lines[i]);
  static const std::regex verdict_re(R"(^VERDICT:\s*(HELPFUL|UNHELPFUL)\s*$)", std::regex::icase);
  std::smatch m;
  if (!std::regex_match(head, m, verdict_re)) return std::nullopt;

  FeedbackRecord rec;
  rec.phase = phase;
  rec.verdict = iequals(m[1].str(), "HELPFUL") ? Verdict::Helpful : Verdict::Unhelpful;
  std::vector<std::string> narrative;
  std::vector<std::string> preview;
  bool in_preview = false;
  for (++i; i < lines.size(); ++i) {
    std::string line = lines[i];
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string t = trim(line);
    if (!in_preview && t.rfind("NEXT:", 0) == 0) {
      in_preview = true;
      line = t.substr(5);
    }
    (in_preview ? preview : narrative).push_back(line);
  }
  rec.narrative = trim(join(narrative, "\n"));
  rec.next_phase_preview = phase == Phase::Extraction ? std::string{} : trim(join(preview, "\n"));
  if (rec.narrative.empty()) return std::nullopt;
  return rec;
}

FeedbackResult generate_feedback(const Session& session, Phase phase, CompletionProvider& provider,
                                 const PromptPack& pack, const OrchestratorOptions& options) {
  FeedbackResult r;
  if (!is_dynamic(session.condition)) {
    const auto it = pack.static_summaries.find(session.condition);
    if (it == pack.static_summaries.end()) {
      fail(ErrorCode::PackInvalid, "pack has no static summaries for " + std::string(to_string(session.condition)));
    }
    const auto& s = it->second.at(static_cast<std::size_t>(phase_index(phase) - 1));
    r.record = FeedbackRecord{phase, Verdict::Helpful, s.narrative,
                              phase == Phase::Extraction ? std::string{} : s.next_phase_preview, false};
    return r;
  }

  const bool s3_shown = std::any_of(session.transcript.begin(), session.transcript.end(),
                                    [&](const Message& m) { return m.phase == phase && m.slot == Slot::S3; });
  if (!s3_shown || !session.find_advice(phase, 1) || !session.find_advice(phase, 2)) {
    fail(ErrorCode::OutOfOrderEvent, "feedback for phase " + std::to_string(phase_index(phase)) +
                                         " needs S3 and both advice entries");
  }
  ContextWindow w = scope_history(AgentRole::FeedbackAgent, session, phase, std::nullopt, pack, std::nullopt, options);
  const auto params = GenerationParams::defaults_for(AgentRole::FeedbackAgent);
  std::string out = call_provider(provider, w, params);
  if (trim(out).empty()) fail(ErrorCode::EmptyCompletion, "feedback agent returned an empty completion");
  auto parsed = parse_feedback_output(out, phase);
  if (!parsed) {
    r.incidents.push_back(Incident{"reask", 1, out});
    ContextWindow again = w;
    again.visible_messages.push_back(VisibleMessage{"Feedback agent", out, VisibleKind::Dialogue, true});
    again.visible_messages.push_back(VisibleMessage{"Instruction", pack.feedback_reask, VisibleKind::Instruction, false});
    out = call_provider(provider, again, params);
    parsed = parse_feedback_output(out, phase);
    if (!parsed) fail(ErrorCode::UnparseableVerdict, "feedback output lacks a VERDICT line after one re-ask");
    w = std::move(again);
  }
  r.record = *parsed;
  r.window = std::move(w);
  return r;
}

}  // namespace scamsim
