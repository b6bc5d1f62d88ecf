#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "scamsim/prompt.hpp"

namespace scamsim {

struct GenerationParams {
  double temperature = 0.5;
  int max_tokens = 8192;

  static GenerationParams defaults_for(AgentRole role);
};

enum class VisibleKind { Dialogue, Advice, Instruction };

struct VisibleMessage {
  std::string speaker_label;
  std::string text;
  VisibleKind kind = VisibleKind::Dialogue;
  // True when the message was authored by the agent the window is built for.
  bool own = false;
};

/// The exact role-scoped view of history handed to one generation call.
struct ContextWindow {
  AgentRole role = AgentRole::Scammer;
  Phase phase = Phase::TrustBuilding;
  std::optional<Slot> slot;  // slot being generated; absent for feedback
  std::string system_prompt;
  std::vector<VisibleMessage> visible_messages;
  std::optional<std::string> pending_advice;  // Target only
  std::string advice_framing;                 // prefix placed before pending advice on the wire
};

/// Every string an observer of this window could read, for purity checks.
std::string flatten(const ContextWindow& window);

struct ChatMessage {
  std::string role;  // "system" | "user" | "assistant"
  std::string content;
};

/// Maps a window onto a chat-completion message list: system prompt first, the
/// agent's own turns as "assistant", everything else as labelled "user" turns,
/// pending advice last.
std::vector<ChatMessage> to_chat_messages(const ContextWindow& window);

class CompletionProvider {
 public:
  virtual ~CompletionProvider() = default;
  virtual std::string generate(const ContextWindow& window, const GenerationParams& params) = 0;
  virtual std::string name() const = 0;
};

/// Deterministic fixture lookup keyed by (role, phase, slot). A fixture entry is
/// either a string or {"default": ..., "variants": [{"contains": [...], "text": ...}]};
/// variants match case-insensitively against the advice visible in the window.
class ScriptedProvider final : public CompletionProvider {
 public:
  explicit ScriptedProvider(Json fixtures);

  std::string generate(const ContextWindow& window, const GenerationParams& params) override;
  std::string name() const override { return "scripted"; }

 private:
  Json fixtures_;
};

class CallbackProvider final : public CompletionProvider {
 public:
  using Fn = std::function<std::string(const ContextWindow&, const GenerationParams&)>;
  explicit CallbackProvider(Fn fn) : fn_(std::move(fn)) {}

  std::string generate(const ContextWindow& window, const GenerationParams& params) override {
    return fn_(window, params);
  }
  std::string name() const override { return "callback"; }

 private:
  Fn fn_;
};

struct RemoteProviderConfig {
  std::string url;      // full endpoint URL, e.g. https://host/v1/chat/completions
  std::string api_key;  // sent as a bearer token
  std::string model;
  std::chrono::milliseconds timeout{30000};
};

/// Wire client for an OpenAI-style chat-completion endpoint.
class RemoteProvider final : public CompletionProvider {
 public:
  explicit RemoteProvider(RemoteProviderConfig config);

  std::string generate(const ContextWindow& window, const GenerationParams& params) override;
  std::string name() const override { return "remote"; }

  /// Request body as sent on the wire (exposed for tests).
  Json build_request(const ContextWindow& window, const GenerationParams& params) const;
  static std::string parse_response(const std::string& body);

 private:
  RemoteProviderConfig config_;
};

}  // namespace scamsim
