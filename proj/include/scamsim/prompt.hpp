#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "scamsim/session.hpp"

namespace scamsim {

enum class AgentRole { Scammer, Target, FeedbackAgent };
inline constexpr std::array<AgentRole, 3> kAllRoles{AgentRole::Scammer, AgentRole::Target,
                                                    AgentRole::FeedbackAgent};

std::string_view to_string(AgentRole r);
AgentRole role_from_string(std::string_view s);

/// A phase-specific system prompt. Placeholders are written `{{name}}` and may
/// appear in any text field; each must be declared in `slots`.
struct PromptTemplate {
  AgentRole role = AgentRole::Scammer;
  Phase phase = Phase::TrustBuilding;
  std::string persona_block;
  std::vector<std::string> rule_lines;  // each starts with "Instruction:" or "Rule:"
  std::vector<std::pair<std::string, std::string>> few_shot_pairs;
  std::string body;
  std::set<std::string> slots;
};

using Bindings = std::map<std::string, std::string>;

/// Placeholder names referenced anywhere in the template, in first-seen order.
std::vector<std::string> referenced_placeholders(const PromptTemplate& t);

/// Structural findings: undeclared placeholders, unprefixed rule lines, empty persona.
std::vector<std::string> check_template(const PromptTemplate& t);

/// Persona block, then rule lines in order, then few-shot pairs, then body, with
/// every placeholder substituted. Bindings must cover exactly the declared slots.
std::string render_prompt(const PromptTemplate& t, const Bindings& bindings);

PromptTemplate template_from_json(const Json& j);
Json to_json(const PromptTemplate& t);

}  // namespace scamsim
