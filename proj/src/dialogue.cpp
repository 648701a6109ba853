#include "riskloom/dialogue.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>

#include <json.hpp>

namespace riskloom {

using nlohmann::json;

const char* to_string(StrategyKind strategy) {
  switch (strategy) {
    case StrategyKind::SelfDisclosure: return "run0";
    case StrategyKind::Empathy: return "run1";
    case StrategyKind::DirectQuestion: return "run2";
  }
  return "?";
}

StrategyKind strategy_from_name(std::string_view name) {
  if (name == "run0") return StrategyKind::SelfDisclosure;
  if (name == "run1") return StrategyKind::Empathy;
  if (name == "run2") return StrategyKind::DirectQuestion;
  throw Error("unknown strategy: " + std::string(name) + " (expected run0|run1|run2)");
}

TemplateId agent_first_template(StrategyKind strategy) {
  switch (strategy) {
    case StrategyKind::SelfDisclosure: return TemplateId::Run0First;
    case StrategyKind::Empathy: return TemplateId::Run1First;
    case StrategyKind::DirectQuestion: return TemplateId::Run2First;
  }
  throw Error("bad strategy");
}

TemplateId agent_next_template(StrategyKind strategy) {
  switch (strategy) {
    case StrategyKind::SelfDisclosure: return TemplateId::Run0Next;
    case StrategyKind::Empathy: return TemplateId::Run1Next;
    case StrategyKind::DirectQuestion: return TemplateId::Run2Next;
  }
  throw Error("bad strategy");
}

// ---------------------------------------------------------------------------
// tolerant block parsing

namespace {

std::string strip_fences(const std::string& raw) {
  std::string out;
  out.reserve(raw.size());
  std::size_t pos = 0;
  while (pos <= raw.size()) {
    std::size_t eol = raw.find('\n', pos);
    std::string_view line(raw.data() + pos,
                          (eol == std::string::npos ? raw.size() : eol) - pos);
    std::string_view trimmed = line;
    while (!trimmed.empty() && (trimmed.front() == ' ' || trimmed.front() == '\t'))
      trimmed.remove_prefix(1);
    if (!trimmed.starts_with("```")) {
      out.append(line);
      out.push_back('\n');
    }
    if (eol == std::string::npos) break;
    pos = eol + 1;
  }
  return out;
}

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

// A key occurrence only counts as a field when it starts one: walking left
// past an optional opening quote and whitespace must land on a separator
// (start of text, newline, '{', ',' or '(').
bool at_field_start(const std::string& text, std::size_t key_pos) {
  std::size_t i = key_pos;
  if (i > 0 && (text[i - 1] == '"' || text[i - 1] == '\'')) --i;
  while (i > 0 && (text[i - 1] == ' ' || text[i - 1] == '\t')) --i;
  if (i == 0) return true;
  char c = text[i - 1];
  return c == '\n' || c == '{' || c == ',' || c == '(';
}

// Position right after the ':' of a field, or npos. Quoted occurrences are
// preferred over bare ones so that keys inside prose rarely match.
std::size_t find_field_colon(const std::string& text, std::string_view key) {
  for (bool quoted_pass : {true, false}) {
    std::size_t pos = 0;
    while ((pos = text.find(key.data(), pos, key.size())) != std::string::npos) {
      std::size_t start = pos;
      pos += 1;  // next search start
      std::size_t after = start + key.size();
      bool quoted = start > 0 && (text[start - 1] == '"' || text[start - 1] == '\'');
      if (quoted != quoted_pass) continue;
      if (!quoted && start > 0 && is_word_char(text[start - 1])) continue;
      if (!at_field_start(text, start)) continue;
      std::size_t i = after;
      if (quoted) {
        if (i >= text.size() || (text[i] != '"' && text[i] != '\'')) continue;
        ++i;
      } else if (i < text.size() && is_word_char(text[i])) {
        continue;  // longer word
      }
      while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
      if (i < text.size() && text[i] == ':') return i + 1;
    }
  }
  return std::string::npos;
}

std::string unescape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size()) {
      char n = s[++i];
      switch (n) {
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        case '"': out.push_back('"'); break;
        case '\\': out.push_back('\\'); break;
        default:
          out.push_back('\\');
          out.push_back(n);
      }
    } else {
      out.push_back(s[i]);
    }
  }
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

// Value after a field's ':' -- a quoted string (possibly spanning lines) or
// a bare token up to the end of the line.
std::optional<std::string> value_after(const std::string& text, std::size_t pos) {
  std::size_t i = pos;
  while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
  if (i >= text.size()) return std::nullopt;
  if (text[i] == '"') {
    std::size_t start = ++i;
    while (i < text.size()) {
      if (text[i] == '"' && text[i - 1] != '\\') break;
      ++i;
    }
    if (i >= text.size()) {  // unterminated: stop at end of line
      std::size_t eol = text.find('\n', start);
      return unescape(std::string_view(text).substr(
          start, (eol == std::string::npos ? text.size() : eol) - start));
    }
    return unescape(std::string_view(text).substr(start, i - start));
  }
  std::size_t eol = text.find('\n', i);
  std::string value = trim(std::string_view(text).substr(
      i, (eol == std::string::npos ? text.size() : eol) - i));
  while (!value.empty() && (value.back() == ',' || value.back() == '}')) {
    value.pop_back();
    value = trim(value);
  }
  return value.empty() ? std::nullopt : std::optional<std::string>(value);
}

std::optional<std::string> find_string_field(const std::string& text, std::string_view key) {
  std::size_t colon = find_field_colon(text, key);
  if (colon == std::string::npos) return std::nullopt;
  return value_after(text, colon);
}

std::optional<int> parse_integral(const std::string& value) {
  if (value.empty()) return std::nullopt;
  char* end = nullptr;
  double d = std::strtod(value.c_str(), &end);
  if (end != value.c_str() + value.size()) return std::nullopt;
  if (d != static_cast<double>(static_cast<long long>(d))) return std::nullopt;
  return static_cast<int>(d);
}

std::string strip_quotes(std::string s) {
  if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                        (s.front() == '\'' && s.back() == '\'')))
    return s.substr(1, s.size() - 2);
  return s;
}

// Strict-JSON attempt, wrapping braceless payloads; manual scanning is the
// fallback for everything the format's examples actually look like.
std::optional<json> try_strict_json(const std::string& text) {
  std::string t = trim(text);
  if (t.empty()) return std::nullopt;
  json j = json::parse(t, nullptr, false);
  if (j.is_object()) return j;
  if (t.front() != '{') {
    j = json::parse("{" + t + "}", nullptr, false);
    if (j.is_object()) return j;
  }
  return std::nullopt;
}

std::optional<std::string> json_string_field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) return std::nullopt;
  if (it->is_string()) return it->get<std::string>();
  return std::nullopt;
}

}  // namespace

ParsedAgentOutput parse_agent_output(const std::string& raw, StrategyKind strategy) {
  if (trim(raw).empty()) throw UnparseableOutputError("empty agent output");
  const std::string text = strip_fences(raw);

  ParsedAgentOutput all;
  if (auto j = try_strict_json(text)) {
    all.reasoning = json_string_field(*j, "reasoning");
    all.message = json_string_field(*j, "message");
    all.experience = json_string_field(*j, "experience");
    all.question = json_string_field(*j, "question");
  } else {
    all.reasoning = find_string_field(text, "reasoning");
    all.message = find_string_field(text, "message");
    all.experience = find_string_field(text, "experience");
    all.question = find_string_field(text, "question");
  }
  if (!all.reasoning && !all.message && !all.experience && !all.question)
    throw UnparseableOutputError("no recognizable fields in agent output");

  // Keep exactly the strategy's schema; anything else is dropped.
  ParsedAgentOutput out;
  auto require = [&](const std::optional<std::string>& v, const char* name)
      -> const std::string& {
    if (!v) throw MissingFieldError(name);
    return *v;
  };
  out.reasoning = require(all.reasoning, "reasoning");
  switch (strategy) {
    case StrategyKind::SelfDisclosure:
      out.message = require(all.message, "message");
      out.experience = require(all.experience, "experience");
      break;
    case StrategyKind::Empathy:
      out.message = require(all.message, "message");
      break;
    case StrategyKind::DirectQuestion:
      break;
  }
  out.question = require(all.question, "question");
  if (out.question->empty()) throw MissingFieldError("question");
  return out;
}

namespace {

void add_symptom_entry(EvaluatorOutput& out, const std::string& name, int score) {
  auto idx = symptom_index(name);
  if (!idx) throw UnknownSymptomError(name);
  if (score < 0 || score > 3)
    throw ScoreOutOfRangeError("score " + std::to_string(score) + " for " + name +
                               " outside {0,1,2,3}");
  out.symptoms_detected.emplace_back(canonical_symptoms()[*idx], score);
}

void assign_next_symptom(EvaluatorOutput& out, const std::string& value) {
  std::string next_value = strip_quotes(trim(value));
  std::string lowered = next_value;
  for (char& c : lowered) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lowered == "none") {
    out.next_symptom = std::nullopt;
  } else if (auto idx = symptom_index(next_value)) {
    out.next_symptom = canonical_symptoms()[*idx];
  } else {
    throw UnknownSymptomError(next_value);
  }
}

}  // namespace

EvaluatorOutput parse_evaluator_output(const std::string& raw) {
  if (trim(raw).empty()) throw UnparseableOutputError("empty evaluator output");
  const std::string text = strip_fences(raw);
  EvaluatorOutput out;

  if (auto j = try_strict_json(text)) {
    if (auto reasoning = json_string_field(*j, "reasoning")) out.reasoning = *reasoning;
    if (auto reason = json_string_field(*j, "reason for selecting the next symptom"))
      out.next_reason = *reason;
    auto next = j->find("next symptom");
    if (next == j->end() || !next->is_string())
      throw UnparseableOutputError("evaluator output lacks a 'next symptom' field");
    assign_next_symptom(out, next->get<std::string>());
    if (auto detected = j->find("symptoms detected");
        detected != j->end() && detected->is_object()) {
      for (const auto& [name, value] : detected->items()) {
        std::optional<int> score;
        if (value.is_number_integer())
          score = value.get<int>();
        else if (value.is_number_float() &&
                 value.get<double>() == static_cast<long long>(value.get<double>()))
          score = static_cast<int>(value.get<double>());
        else if (value.is_string())
          score = parse_integral(value.get<std::string>());
        if (!score) continue;
        add_symptom_entry(out, name, *score);
      }
    }
    return out;
  }

  if (auto reasoning = find_string_field(text, "reasoning")) out.reasoning = *reasoning;
  if (auto reason = find_string_field(text, "reason for selecting the next symptom"))
    out.next_reason = *reason;

  auto next = find_string_field(text, "next symptom");
  if (!next) throw UnparseableOutputError("evaluator output lacks a 'next symptom' field");
  assign_next_symptom(out, *next);

  // The partial score map sits between "symptoms detected": and the next key.
  std::size_t section = find_field_colon(text, "symptoms detected");
  if (section != std::string::npos) {
    std::size_t section_end = text.size();
    for (std::string_view stop : {std::string_view("reason for selecting the next symptom"),
                                  std::string_view("next symptom")}) {
      std::size_t colon = find_field_colon(text, stop);
      if (colon != std::string::npos && colon > section) section_end = std::min(section_end, colon);
    }
    std::string_view body = std::string_view(text).substr(section, section_end - section);

    // Entries are separated by newlines or commas: "Name: Score".
    std::size_t pos = 0;
    while (pos < body.size()) {
      std::size_t end = body.find_first_of(",\n", pos);
      if (end == std::string_view::npos) end = body.size();
      std::string entry = trim(body.substr(pos, end - pos));
      pos = end + 1;
      while (!entry.empty() && (entry.front() == '-' || entry.front() == '*' ||
                                entry.front() == '{' || entry.front() == '}'))
        entry = trim(entry.substr(1));
      while (!entry.empty() && (entry.back() == '{' || entry.back() == '}'))
        entry = trim(entry.substr(0, entry.size() - 1));
      if (entry.empty()) continue;
      std::size_t colon = entry.find(':');
      if (colon == std::string::npos) continue;
      std::string name = strip_quotes(trim(entry.substr(0, colon)));
      std::string value = strip_quotes(trim(entry.substr(colon + 1)));
      if (name.empty()) continue;
      auto score = parse_integral(value);
      if (!score) continue;  // no concrete score claimed by this entry
      add_symptom_entry(out, name, *score);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// session engine

DialogueState make_dialogue_state(StrategyKind strategy, std::string persona_name) {
  DialogueState state;
  state.strategy = strategy;
  state.persona_name = std::move(persona_name);
  return state;
}

std::string agent_visible_text(const ParsedAgentOutput& output, StrategyKind strategy) {
  std::string text;
  auto append = [&text](const std::optional<std::string>& part) {
    if (!part || part->empty()) return;
    if (!text.empty()) text.push_back(' ');
    text += *part;
  };
  if (strategy != StrategyKind::DirectQuestion) {
    append(output.message);
    if (strategy == StrategyKind::SelfDisclosure) append(output.experience);
  }
  append(output.question);
  return text;
}

std::string chat_string(const std::vector<AgentTurn>& transcript,
                        const std::string& persona_name) {
  std::string out;
  for (const auto& turn : transcript) {
    if (!out.empty()) out.push_back('\n');
    out += turn.speaker == Speaker::Agent ? "Assistant" : persona_name;
    out += ": ";
    out += turn.visible_text;
  }
  return out;
}

namespace {

std::string agent_format_reminder(StrategyKind strategy) {
  std::string block = "\"reasoning\": \"your reasoning\",\n";
  if (strategy != StrategyKind::DirectQuestion) block += "\"message\": \"your message\",\n";
  if (strategy == StrategyKind::SelfDisclosure)
    block += "\"experience\": \"your experience\",\n";
  block += "\"question\": \"your question\"";
  return "Your previous reply did not follow the required format. You must only answer "
         "with the following format:\n```\n" +
         block + "\n```";
}

std::string evaluator_format_reminder() {
  return "Your previous reply did not follow the required format. Format always the final "
         "response as follows:\n```\n\"reasoning\": \"your step-by-step analysis of the "
         "user's messages\",\n\"symptoms detected\":\nSymptom1: Score,\nSymptom2: Score,\n"
         "\"reason for selecting the next symptom\": \"your reasoning for needing more "
         "information, or 'None'\",\n\"next symptom\": \"the specific symptom requiring "
         "clarification, or 'None'\"\n```";
}

// Completes and parses, re-prompting with a format reminder up to
// max_parse_retries times before surfacing the parse error.
template <typename Parse>
auto complete_parsed(ChatGateway& gateway, std::vector<ChatMessage> messages,
                     const SessionConfig& config, const std::string& reminder,
                     std::string& raw_out, Parse parse) {
  for (int attempt = 0;; ++attempt) {
    ChatExchange exchange;
    exchange.messages = messages;
    raw_out = gateway.complete(exchange);
    try {
      return parse(raw_out);
    } catch (const Error&) {
      if (attempt >= config.max_parse_retries) throw;
      messages.push_back({"assistant", raw_out});
      messages.push_back({"user", reminder});
    }
  }
}

}  // namespace

void step(DialogueState& state, ChatGateway& agent_llm, ChatGateway& evaluator_llm,
          PersonaClient& persona, const SessionConfig& config) {
  if (state.terminated) throw Error("session already terminated");

  // 1. conversational agent
  PromptVars agent_vars{{"USER_NAME", state.persona_name},
                        {"SYMPTOM", state.planned_symptom}};
  if (state.agent_messages_sent == 0) {
    PromptText prompt = render_prompt(agent_first_template(state.strategy), agent_vars);
    state.agent_context = {{"system", prompt.system_text}, {"user", prompt.user_text}};
  } else {
    PromptText prompt = render_prompt(agent_next_template(state.strategy), agent_vars);
    const std::string& last_reply = state.transcript.back().visible_text;
    state.agent_context.push_back({"user", last_reply + "\n\n" + prompt.user_text});
  }

  std::string agent_raw;
  ParsedAgentOutput parsed = complete_parsed(
      agent_llm, state.agent_context, config, agent_format_reminder(state.strategy),
      agent_raw, [&](const std::string& raw) { return parse_agent_output(raw, state.strategy); });
  state.agent_context.push_back({"assistant", agent_raw});
  std::string visible = agent_visible_text(parsed, state.strategy);

  AgentTurn agent_turn;
  agent_turn.speaker = Speaker::Agent;
  agent_turn.raw = agent_raw;
  agent_turn.parsed = parsed;
  agent_turn.turn_index = static_cast<int>(state.transcript.size());
  agent_turn.visible_text = std::move(visible);
  state.transcript.push_back(std::move(agent_turn));
  ++state.agent_messages_sent;

  // 2. persona reply
  std::string reply = persona.reply(state.transcript.back().visible_text);
  AgentTurn persona_turn;
  persona_turn.speaker = Speaker::Persona;
  persona_turn.raw = reply;
  persona_turn.turn_index = static_cast<int>(state.transcript.size());
  persona_turn.visible_text = std::move(reply);
  state.transcript.push_back(std::move(persona_turn));
  ++state.persona_replies;

  // 3. evaluation agent sees the whole history
  TemplateId eval_template =
      state.evaluations.empty() ? TemplateId::EvalFirst : TemplateId::EvalNext;
  PromptVars eval_vars{{"USER_NAME", state.persona_name},
                       {"CHAT", chat_string(state.transcript, state.persona_name)}};
  PromptText eval_prompt = render_prompt(eval_template, eval_vars);
  std::string eval_raw;
  EvaluatorOutput eval = complete_parsed(
      evaluator_llm,
      std::vector<ChatMessage>{{"system", eval_prompt.system_text},
                               {"user", eval_prompt.user_text}},
      config, evaluator_format_reminder(), eval_raw,
      [](const std::string& raw) { return parse_evaluator_output(raw); });

  // 4. merge (overwrite-on-mention) and plan
  for (const auto& [name, score] : eval.symptoms_detected) state.symptoms.set(name, score);
  state.evaluations.push_back({std::move(eval_raw), eval});
  if (eval.next_symptom) state.planned_symptom = *eval.next_symptom;

  bool evaluator_done =
      !eval.next_symptom && state.persona_replies >= config.min_persona_replies;
  if (evaluator_done || state.agent_messages_sent >= config.max_agent_messages)
    state.terminated = true;
}

SessionResult run_session(StrategyKind strategy, const std::string& persona_name,
                          ChatGateway& agent_llm, ChatGateway& evaluator_llm,
                          PersonaClient& persona, const SessionConfig& config) {
  DialogueState state = make_dialogue_state(strategy, persona_name);
  while (!state.terminated) step(state, agent_llm, evaluator_llm, persona, config);
  return {state.symptoms, std::move(state.transcript), std::move(state.evaluations)};
}

InteractionStats interaction_stats(const std::vector<std::vector<AgentTurn>>& transcripts) {
  InteractionStats stats;
  stats.runs = transcripts.size();
  std::size_t chars = 0;
  for (const auto& transcript : transcripts) {
    stats.messages += transcript.size();
    for (const auto& turn : transcript) chars += turn.visible_text.size();
  }
  if (stats.runs > 0)
    stats.mean_messages_per_run =
        static_cast<double>(stats.messages) / static_cast<double>(stats.runs);
  if (stats.messages > 0)
    stats.mean_chars_per_message =
        static_cast<double>(chars) / static_cast<double>(stats.messages);
  return stats;
}

void write_transcript_jsonl(const std::filesystem::path& path,
                            const std::vector<AgentTurn>& transcript) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write transcript: " + path.string());
  for (const auto& turn : transcript) {
    json j{{"turn", turn.turn_index},
           {"speaker", turn.speaker == Speaker::Agent ? "agent" : "persona"},
           {"text", turn.visible_text},
           {"raw", turn.raw}};
    out << j.dump() << '\n';
  }
}

std::vector<AgentTurn> load_transcript_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open transcript: " + path.string());
  std::vector<AgentTurn> transcript;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw Error("malformed transcript line in " + path.string());
    AgentTurn turn;
    turn.turn_index = j.value("turn", 0);
    turn.speaker = j.value("speaker", "agent") == "agent" ? Speaker::Agent : Speaker::Persona;
    turn.visible_text = j.value("text", "");
    turn.raw = j.value("raw", "");
    transcript.push_back(std::move(turn));
  }
  return transcript;
}

}  // namespace riskloom
