#include "scamsim/provider.hpp"

#include "httplib.h"
#include "scamsim/error.hpp"
#include "scamsim/text.hpp"

namespace scamsim {

GenerationParams GenerationParams::defaults_for(AgentRole role) {
  switch (role) {
    case AgentRole::Scammer: return {0.5, 8192};
    case AgentRole::Target: return {1.0, 8192};
    case AgentRole::FeedbackAgent: return {0.5, 8192};
  }
  return {};
}

std::string flatten(const ContextWindow& window) {
  std::string out = window.system_prompt;
  for (const auto& m : window.visible_messages) {
    out += '\n';
    out += m.speaker_label;
    out += ": ";
    out += m.text;
  }
  if (window.pending_advice) {
    out += '\n';
    out += window.advice_framing;
    out += *window.pending_advice;
  }
  return out;
}

std::vector<ChatMessage> to_chat_messages(const ContextWindow& window) {
  std::vector<ChatMessage> out;
  out.push_back({"system", window.system_prompt});
  for (const auto& m : window.visible_messages) {
    if (m.own) {
      out.push_back({"assistant", m.text});
    } else if (m.kind == VisibleKind::Instruction) {
      out.push_back({"user", m.text});
    } else {
      out.push_back({"user", m.speaker_label + ": " + m.text});
    }
  }
  if (window.pending_advice) out.push_back({"user", window.advice_framing + *window.pending_advice});
  return out;
}

ScriptedProvider::ScriptedProvider(Json fixtures) : fixtures_(std::move(fixtures)) {
  if (!fixtures_.is_object()) fail(ErrorCode::InvalidArgument, "scripted fixtures must be an object");
}

std::string ScriptedProvider::generate(const ContextWindow& window, const GenerationParams&) {
  const std::string role(to_string(window.role));
  const std::string phase = std::to_string(phase_index(window.phase));
  if (!fixtures_.contains(role) || !fixtures_[role].contains(phase)) {
    fail(ErrorCode::ProviderError, "no scripted fixture for " + role + "/" + phase);
  }
  const Json* entry = &fixtures_[role][phase];
  if (window.slot) {
    const std::string slot(to_string(*window.slot));
    if (!entry->contains(slot)) {
      fail(ErrorCode::ProviderError, "no scripted fixture for " + role + "/" + phase + "/" + slot);
    }
    entry = &(*entry)[slot];
  }
  if (entry->is_string()) return entry->get<std::string>();

  std::vector<std::string> advice;
  if (window.pending_advice) advice.push_back(*window.pending_advice);
  for (const auto& m : window.visible_messages) {
    if (m.kind == VisibleKind::Advice) advice.push_back(m.text);
  }
  if (entry->contains("variants")) {
    for (const auto& variant : (*entry)["variants"]) {
      for (const auto& needle : variant.at("contains")) {
        for (const auto& a : advice) {
          if (icontains(a, needle.get<std::string>())) return variant.at("text").get<std::string>();
        }
      }
    }
  }
  return entry->value("default", std::string{});
}

RemoteProvider::RemoteProvider(RemoteProviderConfig config) : config_(std::move(config)) {
  if (config_.url.empty()) fail(ErrorCode::InvalidArgument, "remote provider URL is empty");
}

Json RemoteProvider::build_request(const ContextWindow& window, const GenerationParams& params) const {
  Json messages = Json::array();
  for (const auto& m : to_chat_messages(window)) {
    messages.push_back(Json{{"role", m.role}, {"content", m.content}});
  }
  Json body{{"model", config_.model},
            {"messages", messages},
            {"temperature", params.temperature},
            {"max_tokens", params.max_tokens}};
  return body;
}

std::string RemoteProvider::parse_response(const std::string& body) {
  Json j;
  try {
    j = Json::parse(body);
  } catch (const Json::exception& ex) {
    fail(ErrorCode::ProviderError, std::string("provider returned malformed JSON: ") + ex.what());
  }
  if (j.contains("error")) fail(ErrorCode::ProviderError, "provider error: " + j["error"].dump());
  try {
    const auto& content = j.at("choices").at(0).at("message").at("content");
    return content.is_null() ? std::string{} : content.get<std::string>();
  } catch (const Json::exception&) {
    fail(ErrorCode::ProviderError, "provider response lacks choices[0].message.content");
  }
}

namespace {

struct UrlParts {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

UrlParts split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) fail(ErrorCode::InvalidArgument, "provider URL lacks a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

std::string RemoteProvider::generate(const ContextWindow& window, const GenerationParams& params) {
  const auto parts = split_url(config_.url);
  httplib::Client client(parts.origin);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  auto res = client.Post(parts.path, headers, build_request(window, params).dump(), "application/json");
  if (!res) {
    fail(ErrorCode::ProviderError, "provider transport failure: " + httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300) {
    fail(ErrorCode::ProviderError, "provider returned HTTP " + std::to_string(res->status));
  }
  return parse_response(res->body);
}

}  // namespace scamsim
