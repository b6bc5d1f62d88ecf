#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "scamsim/service/platform.hpp"
#include "scamsim/stats/table.hpp"

namespace scamsim::service {

enum class AdvicePolicy {
  Scripted,  // the pack's six scripted advice texts
  Canned,    // one canned strategy from the pack, chosen by theme id
  Silent,    // no advice; only valid for conditions without advice
};
std::string_view to_string(AdvicePolicy p);
AdvicePolicy advice_policy_from_string(std::string_view s);

struct HeadlessOptions {
  std::filesystem::path pack_dir = "packs/default";
  // Unset: the allocator picks each session's condition.
  std::optional<Condition> condition;
  QuizCadence cadence = QuizCadence::BeforeEachAdvice;
  AdvicePolicy policy = AdvicePolicy::Scripted;
  std::string canned_theme;  // Canned policy; empty takes the first strategy
  std::uint64_t seed = 1;
  std::size_t sessions = 1;
  // Try every wrong option before the correct one.
  bool fumble = false;
  std::string provider = "scripted";
  RemoteProviderConfig remote;
  OrchestratorOptions orchestrator;
  // Replaces the provider named above when set.
  std::shared_ptr<CompletionProvider> provider_override;
  // Replaces the policy when set: advice text for (session, phase, ordinal).
  std::function<std::string(const Session&, Phase, int)> advice_override;
  // Writes sessions/, transcripts.json and table.csv when set.
  std::filesystem::path out_dir;
};

struct HeadlessResult {
  std::vector<Session> sessions;
  stats::ObservationTable table;  // include_excluded export of all sessions
};

/// Runs complete participant sessions against an in-process platform with a
/// simulated clock; identical options produce byte-identical sessions.
HeadlessResult run_headless(const HeadlessOptions& options);

/// Keys: pack_dir, condition, cadence, policy, canned_theme, seed, sessions,
/// fumble, provider, remote{url,api_key,model}, feedback_whole_session, out_dir.
HeadlessOptions headless_options_from_json(const Json& j);

/// Serializes one headless run summary (counts per session).
Json summarize(const HeadlessResult& result);

}  // namespace scamsim::service
