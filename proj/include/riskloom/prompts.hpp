#pragma once

#include <map>
#include <string>
#include <string_view>

#include "riskloom/errors.hpp"

namespace riskloom {

enum class TemplateId {
  Run0First,
  Run1First,
  Run2First,
  Run0Next,
  Run1Next,
  Run2Next,
  EvalFirst,
  EvalNext,
};

struct PromptText {
  std::string system_text;
  std::string user_text;
};

struct MissingVariableError : Error {
  std::string variable;
  explicit MissingVariableError(std::string name)
      : Error("missing prompt variable: {" + name + "}"), variable(std::move(name)) {}
};

using PromptVars = std::map<std::string, std::string, std::less<>>;

/// Raw template with placeholders intact; embedded at build time from the
/// files under prompts/.
const PromptText& prompt_template(TemplateId id);

/// Substitutes every {NAME} placeholder; substitution must be total.
/// Agent templates take USER_NAME and SYMPTOM, evaluator templates take
/// USER_NAME and CHAT.
PromptText render_prompt(TemplateId id, const PromptVars& vars);

}  // namespace riskloom
