#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scamsim/assessment.hpp"
#include "scamsim/prompt.hpp"
#include "scamsim/quiz.hpp"

namespace scamsim {

struct TutorialVideo {
  std::string id;
  std::string title;
  std::string url;
  std::int64_t duration_ms = 0;
};

/// One pre-authored dialogue turn of a Control/Quiz transcript.
struct StaticTurn {
  Speaker speaker = Speaker::StaticA;
  Phase phase = Phase::TrustBuilding;
  Slot slot = Slot::S1;
  std::string text;
};

struct StaticSummary {
  std::string narrative;
  std::string next_phase_preview;
};

/// Canned advice strategy: one advice text per (phase, ordinal), six in total.
struct CannedAdvice {
  std::string theme_id;
  std::string label;
  std::vector<std::string> advice;
};

/// Versioned bundle of prompts, fixtures, quiz items and survey instruments.
struct PromptPack {
  std::string name;
  std::string version;
  std::filesystem::path root;

  std::vector<PromptTemplate> templates;
  std::map<Condition, std::vector<StaticTurn>> static_transcripts;
  std::map<Condition, std::vector<StaticSummary>> static_summaries;  // indexed by phase - 1
  std::vector<QuizItem> quiz_bank;
  std::vector<InstrumentDef> instruments;

  std::vector<std::string> refusal_patterns;  // ECMAScript regexes, matched case-insensitively
  int refusal_retries = 1;
  // "<role>/<phase>/<slot>" or "<role>/<phase>" for feedback.
  std::map<std::string, std::string> fallbacks;

  std::vector<TutorialVideo> tutorial_videos;
  std::string advice_guidance;
  std::string advice_framing;
  std::string feedback_reask;
  std::map<std::string, std::string> speaker_labels;  // "scammer", "target", "static_a", "static_b"
  Bindings bindings;                                  // static template bindings
  std::vector<CannedAdvice> canned_advice;
  Json scripted_fixtures = Json::object();

  // Findings collected while loading (e.g. unreadable or malformed files).
  std::vector<std::string> load_findings;

  const PromptTemplate* find_template(AgentRole role, Phase phase) const;
  std::string label_for(Speaker s) const;
  std::int64_t tutorial_min_dwell_ms() const;
  std::optional<std::string> fallback_for(AgentRole role, Phase phase, std::optional<Slot> slot) const;
};

/// Reads a pack directory. Content problems are collected in load_findings;
/// only a missing or malformed manifest throws.
PromptPack load_pack(const std::filesystem::path& dir);

struct PackReport {
  bool pass = true;
  std::string name;
  std::string version;
  std::vector<std::string> findings;
};

/// Completeness checks: 3×3 phase templates, 15-turn static transcripts, the
/// quiz bank for the cadence, instrument layouts and static summaries.
PackReport validate_pack(const PromptPack& pack, QuizCadence cadence = QuizCadence::BeforeEachAdvice);

/// load_pack + validate_pack; never throws.
PackReport pack_validate(const std::filesystem::path& dir, QuizCadence cadence = QuizCadence::BeforeEachAdvice);

Json to_json(const PackReport& report);

/// Static transcript turn for (condition, phase, slot).
const StaticTurn& static_turn(const PromptPack& pack, Condition condition, Phase phase, Slot slot);

}  // namespace scamsim
