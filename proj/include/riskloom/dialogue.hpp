#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "riskloom/gateway.hpp"
#include "riskloom/prompts.hpp"
#include "riskloom/symptoms.hpp"

namespace riskloom {

/// The three run variants: self-disclosure (run0), empathy without
/// anecdotes (run1), direct questions only (run2).
enum class StrategyKind { SelfDisclosure, Empathy, DirectQuestion };

const char* to_string(StrategyKind strategy);
StrategyKind strategy_from_name(std::string_view name);  // "run0" | "run1" | "run2"

TemplateId agent_first_template(StrategyKind strategy);
TemplateId agent_next_template(StrategyKind strategy);

struct ParsedAgentOutput {
  std::optional<std::string> reasoning;
  std::optional<std::string> message;
  std::optional<std::string> experience;
  std::optional<std::string> question;
};

enum class Speaker { Agent, Persona };

struct AgentTurn {
  Speaker speaker = Speaker::Agent;
  std::string raw;                          // exact model/persona output
  std::optional<ParsedAgentOutput> parsed;  // agent turns only
  int turn_index = 0;
  std::string visible_text;  // what the other side actually saw
};

struct EvaluatorOutput {
  std::string reasoning;
  std::vector<std::pair<std::string, int>> symptoms_detected;  // canonical names
  std::string next_reason;
  std::optional<std::string> next_symptom;  // nullopt == "None"
};

struct EvalRecord {
  std::string raw;
  EvaluatorOutput parsed;
};

struct UnparseableOutputError : Error {
  using Error::Error;
};
struct MissingFieldError : Error {
  std::string field;
  explicit MissingFieldError(std::string name)
      : Error("missing field: " + name), field(std::move(name)) {}
};

/// Tolerant extraction of the strategy's fields from a model reply; accepts
/// fenced, unfenced and braceless key-value blocks. Fields outside the
/// strategy's schema are dropped.
ParsedAgentOutput parse_agent_output(const std::string& raw, StrategyKind strategy);

/// Tolerant extraction of the evaluation block: reasoning, the partial
/// "symptoms detected" map (names normalized to canonical casing), the
/// next-symptom plan and its reason.
EvaluatorOutput parse_evaluator_output(const std::string& raw);

/// Full session state. planned_symptom starts at "Sadness" and the symptom
/// vector starts all-zero.
struct DialogueState {
  StrategyKind strategy = StrategyKind::SelfDisclosure;
  std::string persona_name;
  std::vector<AgentTurn> transcript;
  std::vector<EvalRecord> evaluations;
  SymptomVector symptoms;
  std::string planned_symptom = "Sadness";
  int agent_messages_sent = 0;
  int persona_replies = 0;
  bool terminated = false;

  std::vector<ChatMessage> agent_context;  // running LLM-1 conversation
};

DialogueState make_dialogue_state(StrategyKind strategy, std::string persona_name);

struct SessionConfig {
  int max_agent_messages = 21;
  int min_persona_replies = 2;
  int max_parse_retries = 2;  // format-reminder re-prompts before giving up
};

/// The user-facing text of an agent turn: message, experience and question
/// joined in that order.
std::string agent_visible_text(const ParsedAgentOutput& output, StrategyKind strategy);

/// "Assistant: ..." / "<persona>: ..." lines, one per turn.
std::string chat_string(const std::vector<AgentTurn>& transcript,
                        const std::string& persona_name);

/// One full cycle: agent message (first one probes Sadness, later ones the
/// planned symptom), persona reply, evaluator pass, merge and plan. Sets
/// state.terminated when the evaluator answers None with at least
/// min_persona_replies replies in, or when the agent-message cap is hit.
void step(DialogueState& state, ChatGateway& agent_llm, ChatGateway& evaluator_llm,
          PersonaClient& persona, const SessionConfig& config = {});

struct SessionResult {
  SymptomVector symptoms;
  std::vector<AgentTurn> transcript;
  std::vector<EvalRecord> evaluations;
};

SessionResult run_session(StrategyKind strategy, const std::string& persona_name,
                          ChatGateway& agent_llm, ChatGateway& evaluator_llm,
                          PersonaClient& persona, const SessionConfig& config = {});

struct InteractionStats {
  std::size_t runs = 0;
  std::size_t messages = 0;
  double mean_messages_per_run = 0.0;
  double mean_chars_per_message = 0.0;
};

/// Aggregate message statistics over session transcripts, counting both sides'
/// visible messages.
InteractionStats interaction_stats(const std::vector<std::vector<AgentTurn>>& transcripts);

void write_transcript_jsonl(const std::filesystem::path& path,
                            const std::vector<AgentTurn>& transcript);
std::vector<AgentTurn> load_transcript_jsonl(const std::filesystem::path& path);

}  // namespace riskloom
