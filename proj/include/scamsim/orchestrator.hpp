#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "scamsim/pack.hpp"
#include "scamsim/provider.hpp"

namespace scamsim {

struct OrchestratorOptions {
  // Feedback sees the whole session instead of the phase segment.
  bool feedback_whole_session = false;
  // Use the pack's fallback text once refusal retries are exhausted.
  bool refusal_fallback = true;
  // Overrides the pack's retry count when set.
  std::optional<int> refusal_retries;
};

/// Role-scoped view of the session for one generation call in `phase`.
///
/// Scammer: its phase prompt and the scammer/target transcript, never advice.
/// Target: the same transcript plus the pending advice, which must belong to `phase`.
/// Feedback: the phase segment with that phase's advice interleaved in order.
ContextWindow scope_history(AgentRole role, const Session& session, Phase phase,
                            const std::optional<AdviceRecord>& pending_advice, const PromptPack& pack,
                            std::optional<Slot> slot = std::nullopt, const OrchestratorOptions& options = {});

/// Bindings for exactly the template's slots: pack bindings plus phase_name,
/// phase_number and history.
Bindings bindings_for(const PromptTemplate& t, const PromptPack& pack, const std::string& history);

std::pair<PromptTemplate, PromptTemplate> switch_phase_prompts(const PromptPack& pack, Phase phase);

bool matches_refusal(const std::string& text, const std::vector<std::string>& patterns);

struct Incident {
  std::string kind;  // "refusal" | "fallback" | "reask"
  int attempt = 0;
  std::string detail;
};

Json to_json(const Incident& i);

struct TurnResult {
  Message message;
  ContextWindow window;
  std::vector<Incident> incidents;
};

TurnResult generate_scammer_turn(const Session& session, CompletionProvider& provider, const PromptPack& pack,
                                 Timestamp now, const OrchestratorOptions& options = {});

/// `advice` defaults to the session's record for the current phase and slot ordinal.
TurnResult generate_target_turn(const Session& session, const std::optional<AdviceRecord>& advice,
                                CompletionProvider& provider, const PromptPack& pack, Timestamp now,
                                const OrchestratorOptions& options = {});
TurnResult generate_target_turn(const Session& session, CompletionProvider& provider, const PromptPack& pack,
                                Timestamp now, const OrchestratorOptions& options = {});

Message static_message(const PromptPack& pack, Condition condition, Phase phase, Slot slot, Timestamp now);

/// Content for the RevealMessage step at the cursor: generated in advice-bearing
/// conditions, replayed from the pack otherwise.
TurnResult produce_reveal(const Session& session, CompletionProvider& provider, const PromptPack& pack,
                          Timestamp now, const OrchestratorOptions& options = {});

/// Parses "VERDICT: HELPFUL|UNHELPFUL", then the narrative, then an optional
/// "NEXT:" preview. Returns nullopt when the output does not follow that shape.
std::optional<FeedbackRecord> parse_feedback_output(const std::string& text, Phase phase);

struct FeedbackResult {
  FeedbackRecord record;
  std::optional<ContextWindow> window;  // absent for static summaries
  std::vector<Incident> incidents;
};

FeedbackResult generate_feedback(const Session& session, Phase phase, CompletionProvider& provider,
                                 const PromptPack& pack, const OrchestratorOptions& options = {});

}  // namespace scamsim
