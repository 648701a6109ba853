#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "riskloom/symptoms.hpp"

namespace riskloom {

struct ChatMessage {
  std::string role;  // "system", "user" or "assistant"
  std::string content;
};

struct ChatExchange {
  std::vector<ChatMessage> messages;
  std::optional<double> temperature;  // absent = endpoint defaults
  std::optional<double> top_p;
  std::optional<int> max_tokens;
};

struct GatewayError : Error {
  int retries = 0;
  explicit GatewayError(const std::string& what, int retry_count = 0)
      : Error(what), retries(retry_count) {}
};
struct GatewayTransportError : GatewayError {
  using GatewayError::GatewayError;
};
struct AuthFailureError : GatewayError {
  using GatewayError::GatewayError;
};
struct GatewayTimeoutError : GatewayError {
  using GatewayError::GatewayError;
};
struct RateLimitedError : GatewayError {
  using GatewayError::GatewayError;
};

/// Chat-completion access shared by both agents.
class ChatGateway {
 public:
  virtual ~ChatGateway() = default;
  virtual std::string complete(const ChatExchange& exchange) = 0;
};

struct HttpGatewayConfig {
  std::string base_url;  // e.g. http://localhost:8000
  std::string path = "/v1/chat/completions";
  std::string api_key;
  std::string model = "llama-3.1-8b-instruct";
  int connect_timeout_ms = 5000;
  int read_timeout_ms = 120000;
  int max_retries = 3;        // transient-error retries with exponential backoff
  int backoff_base_ms = 250;
  int max_inflight = 4;

  static HttpGatewayConfig from_env();  // RISKLOOM_LLM_URL / RISKLOOM_LLM_KEY
};

/// OpenAI-compatible chat-completions client. Transient transport errors,
/// timeouts, 429s and 5xx responses are retried with exponential backoff up
/// to the configured cap; auth failures are not.
class HttpChatGateway : public ChatGateway {
 public:
  explicit HttpChatGateway(HttpGatewayConfig config);
  std::string complete(const ChatExchange& exchange) override;

 private:
  HttpGatewayConfig config_;
  class InflightGate;
  std::shared_ptr<InflightGate> gate_;
};

// ---------------------------------------------------------------------------
// offline persona + mock agents for closed-loop testing

/// Something that answers the conversational agent; the scripted persona is
/// the offline implementation, RemotePersona adapts a chat endpoint.
class PersonaClient {
 public:
  virtual ~PersonaClient() = default;
  virtual const std::string& name() const = 0;
  virtual std::string reply(const std::string& agent_message) = 0;
};

/// A deterministic persona with a fixed underlying symptom profile. It
/// refuses direct depression questions, answers symptom questions with the
/// severity phrase for its ground-truth score, and falls back to a neutral
/// filler otherwise.
struct PersonaScript {
  std::string name;
  SymptomVector ground_truth;
  std::vector<std::string> refusal_phrases;
  std::map<std::pair<std::string, int>, std::string> severity_phrases;
  std::map<std::string, std::vector<std::string>> aliases;  // symptom -> extra cues
  std::string neutral_filler;

  /// Fills refusal/severity/filler defaults so that every (symptom,
  /// ground-truth score) pair has a phrase.
  static PersonaScript with_defaults(std::string persona_name, SymptomVector truth);

  static PersonaScript load(const std::filesystem::path& path);
  static std::vector<PersonaScript> load_all(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  /// The canonical encoding "level N" phrase used by the default scripts;
  /// the mock evaluator decodes exactly this shape.
  static std::string default_severity_phrase(const std::string& symptom, int score);
};

class ScriptedPersona : public PersonaClient {
 public:
  explicit ScriptedPersona(PersonaScript script);
  const std::string& name() const override { return script_.name; }
  std::string reply(const std::string& agent_message) override;
  const PersonaScript& script() const { return script_; }

 private:
  PersonaScript script_;
};

/// Routes persona replies through a chat endpoint, accumulating the
/// conversation as alternating user/assistant messages.
class RemotePersona : public PersonaClient {
 public:
  RemotePersona(std::string persona_name, ChatGateway& gateway);
  const std::string& name() const override { return name_; }
  std::string reply(const std::string& agent_message) override;

 private:
  std::string name_;
  ChatGateway& gateway_;
  std::vector<ChatMessage> history_;
};

/// Deterministic stand-in for the conversational LLM: reads the requested
/// symptom out of the rendered prompt and emits a well-formed block whose
/// question names that symptom.
class MockAgentGateway : public ChatGateway {
 public:
  std::string complete(const ChatExchange& exchange) override;
};

/// Deterministic stand-in for the evaluation LLM: decodes the scripted
/// persona's severity phrases from the chat, reports them as symptom scores
/// and plans the next unassessed symptom in canonical order (re-requesting a
/// symptom once when the last reply carried no evidence, then giving up on
/// it). Emits None when nothing is left.
class MockEvaluatorGateway : public ChatGateway {
 public:
  std::string complete(const ChatExchange& exchange) override;
};

}  // namespace riskloom
