#include <doctest.h>

#include <filesystem>
#include <random>

#include "riskloom/bdi.hpp"
#include "riskloom/dialogue.hpp"
#include "riskloom/gateway.hpp"

using namespace riskloom;

namespace {

SymptomVector vector_of(std::initializer_list<std::pair<const char*, int>> entries) {
  SymptomVector v;
  for (const auto& [name, score] : entries) v.set(name, score);
  return v;
}

// Evaluator that always wants more, so only the cap can stop the session.
class NeverDoneEvaluator : public ChatGateway {
 public:
  std::string complete(const ChatExchange&) override {
    return "```\n\"reasoning\": \"still unsure\",\n\"symptoms detected\":\nSadness: 1,\n"
           "\"reason for selecting the next symptom\": \"keep going\",\n"
           "\"next symptom\": \"Sadness\"\n```";
  }
};

// Evaluator that answers None immediately, even on the first round.
class InstantlyDoneEvaluator : public ChatGateway {
 public:
  std::string complete(const ChatExchange&) override {
    return "\"reasoning\": \"enough\",\n\"symptoms detected\":\nSadness: 0,\n"
           "\"reason for selecting the next symptom\": \"None\",\n"
           "\"next symptom\": \"None\"";
  }
};

class ScriptedEvaluator : public ChatGateway {
 public:
  explicit ScriptedEvaluator(std::vector<std::string> outputs)
      : outputs_(std::move(outputs)) {}
  std::string complete(const ChatExchange&) override {
    if (calls_ >= outputs_.size()) return outputs_.back();
    return outputs_[calls_++];
  }

 private:
  std::vector<std::string> outputs_;
  std::size_t calls_ = 0;
};

class FailingGateway : public ChatGateway {
 public:
  std::string complete(const ChatExchange&) override {
    throw GatewayTimeoutError("simulated timeout", 3);
  }
};

// Returns garbage a fixed number of times before a valid reply.
class FlakyAgentGateway : public ChatGateway {
 public:
  FlakyAgentGateway(int bad_replies, std::string good)
      : bad_replies_(bad_replies), good_(std::move(good)) {}
  std::string complete(const ChatExchange& exchange) override {
    ++calls_;
    if (bad_replies_-- > 0) return "total garbage with no fields";
    last_exchange_size_ = exchange.messages.size();
    return good_;
  }
  int calls() const { return calls_; }
  std::size_t last_exchange_size() const { return last_exchange_size_; }

 private:
  int bad_replies_;
  std::string good_;
  int calls_ = 0;
  std::size_t last_exchange_size_ = 0;
};

}  // namespace

TEST_CASE("closed loop recovers an all-zero persona") {
  PersonaScript script = PersonaScript::with_defaults("Quiet", SymptomVector{});
  ScriptedPersona persona(script);
  MockAgentGateway agent;
  MockEvaluatorGateway evaluator;
  SessionResult result = run_session(StrategyKind::Empathy, "Quiet", agent, evaluator, persona);
  CHECK(result.symptoms == script.ground_truth);
  CHECK(bdi_total(result.symptoms) == 0);
}

TEST_CASE("closed loop recovers a sparse profile exactly") {
  SymptomVector truth = vector_of({{"Sadness", 3}, {"Crying", 2}});
  PersonaScript script = PersonaScript::with_defaults("Robin", truth);
  ScriptedPersona persona(script);
  MockAgentGateway agent;
  MockEvaluatorGateway evaluator;
  SessionResult result =
      run_session(StrategyKind::SelfDisclosure, "Robin", agent, evaluator, persona);
  CHECK(result.symptoms == truth);
  CHECK(result.symptoms.score("Sadness") == 3);
  CHECK(result.symptoms.score("Crying") == 2);
  CHECK(result.symptoms.score("Pessimism") == 0);
}

TEST_CASE("transcripts alternate speakers and open with a Sadness probe") {
  PersonaScript script = PersonaScript::with_defaults("Kim", SymptomVector{});
  ScriptedPersona persona(script);
  MockAgentGateway agent;
  MockEvaluatorGateway evaluator;
  SessionResult result =
      run_session(StrategyKind::DirectQuestion, "Kim", agent, evaluator, persona);
  REQUIRE(!result.transcript.empty());
  CHECK(result.transcript[0].speaker == Speaker::Agent);
  CHECK(result.transcript[0].visible_text.find("Sadness") != std::string::npos);
  for (std::size_t i = 0; i < result.transcript.size(); ++i) {
    CHECK(result.transcript[i].speaker ==
          (i % 2 == 0 ? Speaker::Agent : Speaker::Persona));
    CHECK(result.transcript[i].turn_index == static_cast<int>(i));
  }
}

TEST_CASE("strategy field discipline holds across a full session") {
  PersonaScript script = PersonaScript::with_defaults("Ash", SymptomVector{});
  MockAgentGateway agent;
  MockEvaluatorGateway evaluator;

  ScriptedPersona p1(script);
  SessionResult direct = run_session(StrategyKind::DirectQuestion, "Ash", agent, evaluator, p1);
  for (const auto& turn : direct.transcript) {
    if (turn.speaker != Speaker::Agent) continue;
    REQUIRE(turn.parsed);
    CHECK(!turn.parsed->message);
    CHECK(!turn.parsed->experience);
    CHECK(turn.parsed->question);
  }

  ScriptedPersona p2(script);
  SessionResult empathy = run_session(StrategyKind::Empathy, "Ash", agent, evaluator, p2);
  for (const auto& turn : empathy.transcript) {
    if (turn.speaker != Speaker::Agent) continue;
    REQUIRE(turn.parsed);
    CHECK(turn.parsed->message);
    CHECK(!turn.parsed->experience);
  }
}

TEST_CASE("the agent message cap forces termination") {
  PersonaScript script = PersonaScript::with_defaults("Loop", SymptomVector{});
  ScriptedPersona persona(script);
  MockAgentGateway agent;
  NeverDoneEvaluator evaluator;
  DialogueState state = make_dialogue_state(StrategyKind::Empathy, "Loop");
  while (!state.terminated) step(state, agent, evaluator, persona);
  CHECK(state.agent_messages_sent == 21);
  CHECK(state.persona_replies == 21);
  CHECK(state.terminated);
}

TEST_CASE("None before two persona replies does not terminate") {
  PersonaScript script = PersonaScript::with_defaults("Swift", SymptomVector{});
  ScriptedPersona persona(script);
  MockAgentGateway agent;
  InstantlyDoneEvaluator evaluator;
  DialogueState state = make_dialogue_state(StrategyKind::DirectQuestion, "Swift");
  step(state, agent, evaluator, persona);
  CHECK(state.persona_replies == 1);
  CHECK(!state.terminated);  // minimum of two interactions not yet met
  step(state, agent, evaluator, persona);
  CHECK(state.persona_replies == 2);
  CHECK(state.terminated);
}

TEST_CASE("symptom merge overwrites on mention and keeps the rest") {
  PersonaScript script = PersonaScript::with_defaults("Echo", SymptomVector{});
  ScriptedPersona persona(script);
  MockAgentGateway agent;
  ScriptedEvaluator evaluator({
      "\"reasoning\": \"first\",\n\"symptoms detected\":\nSadness: 2,\nCrying: 1,\n"
      "\"reason for selecting the next symptom\": \"more\",\n\"next symptom\": \"Agitation\"",
      "\"reasoning\": \"second\",\n\"symptoms detected\":\nSadness: 1,\n"
      "\"reason for selecting the next symptom\": \"None\",\n\"next symptom\": \"None\"",
  });
  DialogueState state = make_dialogue_state(StrategyKind::Empathy, "Echo");
  step(state, agent, evaluator, persona);
  CHECK(state.symptoms.score("Sadness") == 2);
  CHECK(state.symptoms.score("Crying") == 1);
  CHECK(state.planned_symptom == "Agitation");
  step(state, agent, evaluator, persona);
  CHECK(state.terminated);
  CHECK(state.symptoms.score("Sadness") == 1);  // later judgment wins
  CHECK(state.symptoms.score("Crying") == 1);   // unlisted stays
}

TEST_CASE("replaying identical evaluator outputs yields the same vector") {
  auto run_once = [] {
    PersonaScript script = PersonaScript::with_defaults("Replay", SymptomVector{});
    ScriptedPersona persona(script);
    MockAgentGateway agent;
    ScriptedEvaluator evaluator({
        "\"symptoms detected\":\nSadness: 2,\n\"next symptom\": \"Crying\"",
        "\"symptoms detected\":\nCrying: 3,\nSadness: 2,\n\"next symptom\": \"None\"",
    });
    DialogueState state = make_dialogue_state(StrategyKind::DirectQuestion, "Replay");
    while (!state.terminated) step(state, agent, evaluator, persona);
    return state.symptoms;
  };
  CHECK(run_once() == run_once());
}

TEST_CASE("gateway failures abort the session but keep the partial transcript") {
  PersonaScript script = PersonaScript::with_defaults("Cut", SymptomVector{});
  ScriptedPersona persona(script);
  MockAgentGateway agent;
  FailingGateway evaluator;
  DialogueState state = make_dialogue_state(StrategyKind::Empathy, "Cut");
  CHECK_THROWS_AS(step(state, agent, evaluator, persona), GatewayTimeoutError);
  CHECK(state.transcript.size() == 2);  // agent turn + persona reply survived
  CHECK(state.persona_replies == 1);
  CHECK(!state.terminated);
}

TEST_CASE("format reminders recover from malformed agent replies") {
  PersonaScript script = PersonaScript::with_defaults("Patch", SymptomVector{});
  std::string good = "\"reasoning\": \"ok\",\n\"question\": \"how are you feeling about "
                     "Sadness? could you place yourself on a 0 to 3 scale?\"";

  ScriptedPersona persona(script);
  FlakyAgentGateway twice_bad(2, good);
  InstantlyDoneEvaluator evaluator;
  DialogueState state = make_dialogue_state(StrategyKind::DirectQuestion, "Patch");
  step(state, twice_bad, evaluator, persona);
  CHECK(twice_bad.calls() == 3);
  // the re-prompt appended the bad reply and a reminder twice: 2 + 2*2 messages
  CHECK(twice_bad.last_exchange_size() == 6);
  CHECK(state.agent_messages_sent == 1);

  ScriptedPersona persona2(script);
  FlakyAgentGateway three_bad(3, good);
  DialogueState state2 = make_dialogue_state(StrategyKind::DirectQuestion, "Patch");
  CHECK_THROWS_AS(step(state2, three_bad, evaluator, persona2), UnparseableOutputError);
}

TEST_CASE("interaction statistics match a hand-counted fixture") {
  // run A: "Hello there" (11) / "Fine" (4) / "And now?" (8); run B: "Hi" (2)
  std::vector<AgentTurn> run_a(3);
  run_a[0] = {Speaker::Agent, "", std::nullopt, 0, "Hello there"};
  run_a[1] = {Speaker::Persona, "", std::nullopt, 1, "Fine"};
  run_a[2] = {Speaker::Agent, "", std::nullopt, 2, "And now?"};
  std::vector<AgentTurn> run_b(1);
  run_b[0] = {Speaker::Agent, "", std::nullopt, 0, "Hi"};

  InteractionStats stats = interaction_stats({run_a, run_b});
  CHECK(stats.runs == 2);
  CHECK(stats.messages == 4);
  CHECK(stats.mean_messages_per_run == doctest::Approx(2.0));
  CHECK(stats.mean_chars_per_message == doctest::Approx(25.0 / 4.0));
}

TEST_CASE("transcripts round-trip through JSONL") {
  std::vector<AgentTurn> transcript(2);
  transcript[0] = {Speaker::Agent, "raw block", std::nullopt, 0, "hello"};
  transcript[1] = {Speaker::Persona, "fine", std::nullopt, 1, "fine"};
  auto path = std::filesystem::temp_directory_path() / "riskloom_test_transcript.jsonl";
  write_transcript_jsonl(path, transcript);
  auto loaded = load_transcript_jsonl(path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].speaker == Speaker::Agent);
  CHECK(loaded[0].visible_text == "hello");
  CHECK(loaded[0].raw == "raw block");
  CHECK(loaded[1].speaker == Speaker::Persona);
  std::filesystem::remove(path);
}
