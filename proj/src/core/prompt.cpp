#include "scamsim/prompt.hpp"

#include <algorithm>

#include "scamsim/error.hpp"
#include "scamsim/text.hpp"

namespace scamsim {

std::string_view to_string(AgentRole r) {
  switch (r) {
    case AgentRole::Scammer: return "scammer";
    case AgentRole::Target: return "target";
    case AgentRole::FeedbackAgent: return "feedback";
  }
  return "scammer";
}

AgentRole role_from_string(std::string_view s) {
  for (AgentRole r : kAllRoles) {
    if (to_string(r) == s) return r;
  }
  fail(ErrorCode::InvalidArgument, "unknown agent role: '" + std::string(s) + "'");
}

namespace {

constexpr std::string_view kOpen = "{{";
constexpr std::string_view kClose = "}}";

void collect(std::string_view text, std::vector<std::string>& out) {
  std::size_t pos = 0;
  while ((pos = text.find(kOpen, pos)) != std::string_view::npos) {
    const auto end = text.find(kClose, pos + kOpen.size());
    if (end == std::string_view::npos) break;
    std::string name = trim(text.substr(pos + kOpen.size(), end - pos - kOpen.size()));
    if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(std::move(name));
    pos = end + kClose.size();
  }
}

std::string substitute(std::string_view text, const Bindings& bindings) {
  std::string out;
  std::size_t pos = 0;
  while (true) {
    const auto open = text.find(kOpen, pos);
    if (open == std::string_view::npos) break;
    const auto close = text.find(kClose, open + kOpen.size());
    if (close == std::string_view::npos) break;
    out.append(text.substr(pos, open - pos));
    const std::string name = trim(text.substr(open + kOpen.size(), close - open - kOpen.size()));
    const auto it = bindings.find(name);
    if (it == bindings.end()) fail(ErrorCode::UnknownSlot, "placeholder '" + name + "' is not a declared slot");
    out += it->second;
    pos = close + kClose.size();
  }
  out.append(text.substr(pos));
  return out;
}

}  // namespace

std::vector<std::string> referenced_placeholders(const PromptTemplate& t) {
  std::vector<std::string> out;
  collect(t.persona_block, out);
  for (const auto& r : t.rule_lines) collect(r, out);
  for (const auto& [in, o] : t.few_shot_pairs) {
    collect(in, out);
    collect(o, out);
  }
  collect(t.body, out);
  return out;
}

std::vector<std::string> check_template(const PromptTemplate& t) {
  std::vector<std::string> findings;
  const std::string tag = std::string(to_string(t.role)) + "/" + std::to_string(phase_index(t.phase));
  if (trim(t.persona_block).empty()) findings.push_back(tag + ": empty persona block");
  for (const auto& name : referenced_placeholders(t)) {
    if (!t.slots.count(name)) findings.push_back(tag + ": placeholder '" + name + "' not declared in slots");
  }
  for (const auto& line : t.rule_lines) {
    if (line.rfind("Instruction:", 0) != 0 && line.rfind("Rule:", 0) != 0) {
      findings.push_back(tag + ": rule line lacks 'Instruction:'/'Rule:' prefix: " + line);
    }
  }
  return findings;
}

std::string render_prompt(const PromptTemplate& t, const Bindings& bindings) {
  for (const auto& [key, value] : bindings) {
    if (!t.slots.count(key)) fail(ErrorCode::UnknownSlot, "binding '" + key + "' is not a slot of the template");
  }
  for (const auto& slot : t.slots) {
    if (!bindings.count(slot)) fail(ErrorCode::MissingSlotBinding, "no binding for slot '" + slot + "'");
  }

  std::string out = substitute(t.persona_block, bindings);
  if (!t.rule_lines.empty()) {
    out += "\n\n";
    for (const auto& line : t.rule_lines) {
      out += substitute(line, bindings);
      out += '\n';
    }
  }
  if (!t.few_shot_pairs.empty()) {
    out += "\nExamples:\n";
    for (const auto& [in, o] : t.few_shot_pairs) {
      out += "Input: " + substitute(in, bindings) + "\nOutput: " + substitute(o, bindings) + "\n";
    }
  }
  if (!t.body.empty()) {
    out += '\n';
    out += substitute(t.body, bindings);
  }
  return out;
}

PromptTemplate template_from_json(const Json& j) {
  PromptTemplate t;
  t.role = role_from_string(j.at("role").get<std::string>());
  t.phase = phase_from_index(j.at("phase").get<int>());
  t.persona_block = j.at("persona").get<std::string>();
  if (j.contains("rules")) t.rule_lines = j.at("rules").get<std::vector<std::string>>();
  if (j.contains("few_shot")) {
    for (const auto& p : j.at("few_shot")) {
      t.few_shot_pairs.emplace_back(p.at("input").get<std::string>(), p.at("output").get<std::string>());
    }
  }
  t.body = j.value("body", std::string{});
  if (j.contains("slots")) {
    for (const auto& s : j.at("slots")) t.slots.insert(s.get<std::string>());
  }
  return t;
}

Json to_json(const PromptTemplate& t) {
  Json few = Json::array();
  for (const auto& [in, o] : t.few_shot_pairs) few.push_back(Json{{"input", in}, {"output", o}});
  return Json{{"role", to_string(t.role)},   {"phase", phase_index(t.phase)},
              {"persona", t.persona_block},  {"rules", t.rule_lines},
              {"few_shot", few},             {"body", t.body},
              {"slots", t.slots}};
}

}  // namespace scamsim
