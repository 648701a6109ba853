#include "riskloom/gateway.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <semaphore>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace riskloom {

using nlohmann::json;

// ---------------------------------------------------------------------------
// HTTP gateway

HttpGatewayConfig HttpGatewayConfig::from_env() {
  HttpGatewayConfig cfg;
  if (const char* url = std::getenv("RISKLOOM_LLM_URL")) cfg.base_url = url;
  if (const char* key = std::getenv("RISKLOOM_LLM_KEY")) cfg.api_key = key;
  return cfg;
}

class HttpChatGateway::InflightGate {
 public:
  explicit InflightGate(int limit) : sem_(limit) {}
  void acquire() { sem_.acquire(); }
  void release() { sem_.release(); }

 private:
  std::counting_semaphore<> sem_;
};

HttpChatGateway::HttpChatGateway(HttpGatewayConfig config)
    : config_(std::move(config)),
      gate_(std::make_shared<InflightGate>(std::max(1, config_.max_inflight))) {
  if (config_.base_url.empty())
    throw Error("gateway base URL is not configured (set RISKLOOM_LLM_URL)");
}

namespace {

json exchange_payload(const ChatExchange& exchange, const std::string& model) {
  json messages = json::array();
  for (const auto& m : exchange.messages)
    messages.push_back({{"role", m.role}, {"content", m.content}});
  json payload{{"model", model}, {"messages", messages}};
  if (exchange.temperature) payload["temperature"] = *exchange.temperature;
  if (exchange.top_p) payload["top_p"] = *exchange.top_p;
  if (exchange.max_tokens) payload["max_tokens"] = *exchange.max_tokens;
  return payload;
}

bool timeout_error(httplib::Error err) {
  return err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
         err == httplib::Error::Write;
}

}  // namespace

std::string HttpChatGateway::complete(const ChatExchange& exchange) {
  gate_->acquire();
  struct Release {
    InflightGate* gate;
    ~Release() { gate->release(); }
  } release{gate_.get()};

  const std::string body = exchange_payload(exchange, config_.model).dump();
  httplib::Headers headers;
  if (!config_.api_key.empty())
    headers.emplace("Authorization", "Bearer " + config_.api_key);

  std::string last_error;
  bool last_was_timeout = false;
  bool last_was_rate_limit = false;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      auto delay = std::chrono::milliseconds(config_.backoff_base_ms) * (1 << (attempt - 1));
      std::this_thread::sleep_for(delay);
    }

    httplib::Client client(config_.base_url);
    client.set_connection_timeout(0, config_.connect_timeout_ms * 1000);
    client.set_read_timeout(0, config_.read_timeout_ms * 1000);
    auto res = client.Post(config_.path, headers, body, "application/json");

    if (!res) {
      last_was_timeout = timeout_error(res.error());
      last_was_rate_limit = false;
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 401 || res->status == 403)
      throw AuthFailureError("authentication rejected (HTTP " +
                                 std::to_string(res->status) + ")",
                             attempt);
    if (res->status == 429) {
      last_was_rate_limit = true;
      last_was_timeout = false;
      last_error = "rate limited (HTTP 429)";
      continue;
    }
    if (res->status >= 500) {
      last_was_rate_limit = false;
      last_was_timeout = false;
      last_error = "server error (HTTP " + std::to_string(res->status) + ")";
      continue;
    }
    if (res->status != 200)
      throw GatewayTransportError("unexpected HTTP " + std::to_string(res->status), attempt);

    json reply = json::parse(res->body, nullptr, false);
    if (reply.is_discarded() || !reply.contains("choices") || reply["choices"].empty())
      throw GatewayTransportError("malformed completion payload", attempt);
    const json& message = reply["choices"][0].value("message", json::object());
    if (!message.contains("content") || !message["content"].is_string())
      throw GatewayTransportError("completion payload has no message content", attempt);
    std::string content = message["content"].get<std::string>();
    if (content.empty()) throw GatewayTransportError("completion content is empty", attempt);
    return content;
  }

  if (last_was_timeout) throw GatewayTimeoutError(last_error, config_.max_retries);
  if (last_was_rate_limit) throw RateLimitedError(last_error, config_.max_retries);
  throw GatewayTransportError(last_error, config_.max_retries);
}

// ---------------------------------------------------------------------------
// scripted persona

namespace {

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

constexpr std::string_view kSeverityHead = "When it comes to ";
constexpr std::string_view kSeverityMid = ", honestly I would put myself at level ";
constexpr std::string_view kSeverityTail = " out of 3 these days.";

}  // namespace

std::string PersonaScript::default_severity_phrase(const std::string& symptom, int score) {
  return std::string(kSeverityHead) + symptom + std::string(kSeverityMid) +
         std::to_string(score) + std::string(kSeverityTail);
}

PersonaScript PersonaScript::with_defaults(std::string persona_name, SymptomVector truth) {
  PersonaScript script;
  script.name = std::move(persona_name);
  script.ground_truth = truth;
  script.refusal_phrases = {
      "I'd rather not put a label on anything, if that's okay.",
      "That feels a little too direct for me to answer.",
  };
  script.neutral_filler = "I'm not sure there's much to say about that.";
  const auto& names = canonical_symptoms();
  for (std::size_t i = 0; i < names.size(); ++i) {
    int score = truth.score_at(i);
    script.severity_phrases[{names[i], score}] = default_severity_phrase(names[i], score);
  }
  return script;
}

namespace {

PersonaScript script_from_json(const json& j) {
  if (!j.is_object()) throw Error("persona entry must be a JSON object");
  std::string name = j.at("persona").get<std::string>();
  SymptomVector truth;
  for (const auto& [key, value] : j.at("scores").items()) {
    if (!value.is_number_integer()) throw Error("persona score for " + key + " must be an integer");
    truth.set(key, value.get<int>());
  }
  PersonaScript script = PersonaScript::with_defaults(std::move(name), truth);
  if (auto it = j.find("refusals"); it != j.end()) {
    script.refusal_phrases.clear();
    for (const auto& r : *it) script.refusal_phrases.push_back(r.get<std::string>());
  }
  if (auto it = j.find("neutral_filler"); it != j.end())
    script.neutral_filler = it->get<std::string>();
  if (auto it = j.find("severity_phrases"); it != j.end()) {
    for (const auto& p : *it) {
      script.severity_phrases[{p.at("symptom").get<std::string>(), p.at("score").get<int>()}] =
          p.at("phrase").get<std::string>();
    }
  }
  if (auto it = j.find("aliases"); it != j.end()) {
    for (const auto& [sym, list] : it->items())
      for (const auto& a : list) script.aliases[sym].push_back(a.get<std::string>());
  }
  return script;
}

}  // namespace

PersonaScript PersonaScript::load(const std::filesystem::path& path) {
  auto all = load_all(path);
  if (all.size() != 1)
    throw Error("expected exactly one persona in " + path.string() + ", found " +
                std::to_string(all.size()));
  return all.front();
}

std::vector<PersonaScript> PersonaScript::load_all(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open persona file: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error("persona file " + path.string() + ": " + e.what());
  }
  std::vector<PersonaScript> scripts;
  if (j.is_array())
    for (const auto& entry : j) scripts.push_back(script_from_json(entry));
  else
    scripts.push_back(script_from_json(j));
  return scripts;
}

void PersonaScript::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write persona file: " + path.string());
  json scores = json::object();
  const auto& names = canonical_symptoms();
  for (std::size_t i = 0; i < names.size(); ++i) scores[names[i]] = ground_truth.score_at(i);
  json phrases = json::array();
  for (const auto& [key, phrase] : severity_phrases)
    phrases.push_back({{"symptom", key.first}, {"score", key.second}, {"phrase", phrase}});
  json j{{"persona", name},
         {"scores", scores},
         {"refusals", refusal_phrases},
         {"neutral_filler", neutral_filler},
         {"severity_phrases", phrases}};
  out << j.dump(2) << '\n';
}

ScriptedPersona::ScriptedPersona(PersonaScript script) : script_(std::move(script)) {
  const auto& names = canonical_symptoms();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (!script_.severity_phrases.count({names[i], script_.ground_truth.score_at(i)}))
      throw Error("persona " + script_.name + " lacks a phrase for " + names[i] +
                  " at its ground-truth score");
  }
  if (script_.refusal_phrases.empty())
    throw Error("persona " + script_.name + " needs at least one refusal phrase");
}

std::string ScriptedPersona::reply(const std::string& agent_message) {
  const std::string lower = lowercase(agent_message);

  if (lower.find("depress") != std::string::npos ||
      lower.find("diagnos") != std::string::npos) {
    std::size_t idx = fnv1a(agent_message) % script_.refusal_phrases.size();
    return script_.refusal_phrases[idx];
  }

  // Longest mentioned symptom name (or alias) wins, so "Loss of Interest in
  // Sex" is never mistaken for "Loss of Interest".
  const auto& names = canonical_symptoms();
  std::size_t best = names.size();
  std::size_t best_len = 0;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (lower.find(lowercase(names[i])) != std::string::npos && names[i].size() > best_len) {
      best = i;
      best_len = names[i].size();
    }
    if (auto it = script_.aliases.find(names[i]); it != script_.aliases.end()) {
      for (const auto& alias : it->second)
        if (lower.find(lowercase(alias)) != std::string::npos && alias.size() > best_len) {
          best = i;
          best_len = alias.size();
        }
    }
  }
  if (best < names.size()) {
    int score = script_.ground_truth.score_at(best);
    auto it = script_.severity_phrases.find({names[best], score});
    if (it != script_.severity_phrases.end()) return it->second;
    return PersonaScript::default_severity_phrase(names[best], score);
  }
  return script_.neutral_filler;
}

RemotePersona::RemotePersona(std::string persona_name, ChatGateway& gateway)
    : name_(std::move(persona_name)), gateway_(gateway) {}

std::string RemotePersona::reply(const std::string& agent_message) {
  history_.push_back({"user", agent_message});
  ChatExchange exchange;
  exchange.messages = history_;
  std::string text = gateway_.complete(exchange);
  history_.push_back({"assistant", text});
  return text;
}

// ---------------------------------------------------------------------------
// mock gateways

namespace {

const std::string* last_user_content(const ChatExchange& exchange) {
  for (auto it = exchange.messages.rbegin(); it != exchange.messages.rend(); ++it)
    if (it->role == "user") return &it->content;
  return nullptr;
}

const std::string* system_content(const ChatExchange& exchange) {
  for (const auto& m : exchange.messages)
    if (m.role == "system") return &m.content;
  return nullptr;
}

// Extracts the last "the symptom: '<name>'" request from a rendered prompt.
std::optional<std::string> requested_symptom(const std::string& prompt) {
  constexpr std::string_view kMarker = "the symptom: '";
  std::size_t pos = prompt.rfind(kMarker);
  if (pos == std::string::npos) return std::nullopt;
  std::size_t start = pos + kMarker.size();
  std::size_t end = prompt.find('\'', start);
  if (end == std::string::npos) return std::nullopt;
  return prompt.substr(start, end - start);
}

}  // namespace

std::string MockAgentGateway::complete(const ChatExchange& exchange) {
  const std::string* user = last_user_content(exchange);
  if (!user) throw Error("mock agent: exchange has no user message");
  auto symptom = requested_symptom(*user);
  if (!symptom) throw Error("mock agent: prompt does not request a symptom");

  const std::string* system = system_content(exchange);
  bool wants_experience = system && system->find("\"experience\"") != std::string::npos;
  bool wants_message = system && system->find("\"message\"") != std::string::npos;

  std::string out = "```\n";
  out += "\"reasoning\": \"I will ask about " + *symptom + " next.\",\n";
  if (wants_message)
    out += "\"message\": \"Thank you for telling me how things have been going.\",\n";
  if (wants_experience)
    out += "\"experience\": \"I remember a stretch when " + *symptom +
           " shaped my days more than I expected.\",\n";
  out += "\"question\": \"Lately, how have you been when it comes to " + *symptom +
         "? Could you place yourself on a 0 to 3 scale?\"\n";
  out += "```";
  return out;
}

namespace {

struct ChatEvidence {
  std::map<std::string, int> scores;   // canonical name -> decoded score
  std::vector<std::string> asks;       // asked canonical names, in order
};

ChatEvidence decode_chat(const std::string& text) {
  ChatEvidence ev;

  std::size_t pos = 0;
  while ((pos = text.find(kSeverityHead, pos)) != std::string::npos) {
    std::size_t name_start = pos + kSeverityHead.size();
    std::size_t mid = text.find(kSeverityMid, name_start);
    pos = name_start;
    if (mid == std::string::npos) continue;
    std::string name = text.substr(name_start, mid - name_start);
    std::size_t digit = mid + kSeverityMid.size();
    if (digit >= text.size() || !std::isdigit(static_cast<unsigned char>(text[digit])))
      continue;
    if (text.compare(digit + 1, kSeverityTail.size(), kSeverityTail) != 0) continue;
    if (auto idx = symptom_index(name)) {
      ev.scores[canonical_symptoms()[*idx]] = text[digit] - '0';
      pos = digit + 1 + kSeverityTail.size();
    }
  }

  constexpr std::string_view kAsk = "when it comes to ";
  pos = 0;
  while ((pos = text.find(kAsk, pos)) != std::string::npos) {
    std::size_t name_start = pos + kAsk.size();
    std::size_t end = text.find('?', name_start);
    pos = name_start;
    if (end == std::string::npos) continue;
    std::string name = text.substr(name_start, end - name_start);
    if (auto idx = symptom_index(name)) ev.asks.push_back(canonical_symptoms()[*idx]);
  }
  return ev;
}

}  // namespace

std::string MockEvaluatorGateway::complete(const ChatExchange& exchange) {
  const std::string* user = last_user_content(exchange);
  if (!user) throw Error("mock evaluator: exchange has no user message");
  ChatEvidence ev = decode_chat(*user);

  auto ask_count = [&](const std::string& name) {
    return std::count(ev.asks.begin(), ev.asks.end(), name);
  };

  std::string next;
  std::string reason;
  if (!ev.asks.empty() && !ev.scores.count(ev.asks.back()) && ask_count(ev.asks.back()) < 2) {
    next = ev.asks.back();  // one repeat before giving up
    reason = "The last reply gave no usable signal about " + next + ".";
  } else {
    for (const auto& name : canonical_symptoms()) {
      if (ev.scores.count(name)) continue;
      if (ask_count(name) >= 2) continue;  // asked twice, no evidence: move on
      next = name;
      reason = "No evidence yet about " + name + ".";
      break;
    }
  }
  if (next.empty()) reason = "Every symptom has been covered.";

  std::string out = "```\n";
  out += "\"reasoning\": \"Decoded the persona's statements so far.\",\n";
  out += "\"symptoms detected\":\n";
  for (const auto& name : canonical_symptoms()) {
    auto it = ev.scores.find(name);
    if (it == ev.scores.end()) continue;
    out += name + ": " + std::to_string(it->second) + ",\n";
  }
  out += "\"reason for selecting the next symptom\": \"" + reason + "\",\n";
  out += "\"next symptom\": \"" + (next.empty() ? std::string("None") : next) + "\"\n";
  out += "```";
  return out;
}

}  // namespace riskloom
