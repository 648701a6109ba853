#include "riskloom/prompts.hpp"

namespace riskloom {

namespace detail {
extern const char* const kRun0System;
extern const char* const kRun1System;
extern const char* const kRun2System;
extern const char* const kEvalSystem;
extern const char* const kRun0FirstUser;
extern const char* const kRun1FirstUser;
extern const char* const kRun2FirstUser;
extern const char* const kRun0NextUser;
extern const char* const kRun1NextUser;
extern const char* const kRun2NextUser;
extern const char* const kEvalFirstUser;
extern const char* const kEvalNextUser;
}  // namespace detail

const PromptText& prompt_template(TemplateId id) {
  static const std::map<TemplateId, PromptText> templates = {
      {TemplateId::Run0First, {detail::kRun0System, detail::kRun0FirstUser}},
      {TemplateId::Run1First, {detail::kRun1System, detail::kRun1FirstUser}},
      {TemplateId::Run2First, {detail::kRun2System, detail::kRun2FirstUser}},
      {TemplateId::Run0Next, {detail::kRun0System, detail::kRun0NextUser}},
      {TemplateId::Run1Next, {detail::kRun1System, detail::kRun1NextUser}},
      {TemplateId::Run2Next, {detail::kRun2System, detail::kRun2NextUser}},
      {TemplateId::EvalFirst, {detail::kEvalSystem, detail::kEvalFirstUser}},
      {TemplateId::EvalNext, {detail::kEvalSystem, detail::kEvalNextUser}},
  };
  return templates.at(id);
}

namespace {

std::string substitute(const std::string& text, const PromptVars& vars) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t open = text.find('{', pos);
    if (open == std::string::npos) {
      out.append(text, pos, std::string::npos);
      break;
    }
    out.append(text, pos, open - pos);
    std::size_t close = text.find('}', open + 1);
    if (close == std::string::npos)
      throw MissingVariableError(text.substr(open + 1));
    std::string name = text.substr(open + 1, close - open - 1);
    auto it = vars.find(name);
    if (it == vars.end()) throw MissingVariableError(name);
    out += it->second;
    pos = close + 1;
  }
  return out;
}

}  // namespace

PromptText render_prompt(TemplateId id, const PromptVars& vars) {
  const PromptText& tpl = prompt_template(id);
  return {substitute(tpl.system_text, vars), substitute(tpl.user_text, vars)};
}

}  // namespace riskloom
