#include "riskloom/stream.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "riskloom/scoring.hpp"

namespace riskloom {

using nlohmann::json;

StreamRun::StreamRun(std::vector<SubjectRecord> corpus) {
  std::set<std::string> seen;
  subjects_.reserve(corpus.size());
  for (auto& rec : corpus) {
    if (!seen.insert(rec.subject_id).second)
      throw Error("duplicate subject id in corpus: " + rec.subject_id);
    if (rec.writings.empty())
      throw Error("subject " + rec.subject_id + " has no writings");
    subjects_.push_back({std::move(rec), 0, false});
  }
}

std::optional<Round> StreamRun::next_round() {
  if (awaiting_decisions_)
    throw ProtocolError("round " + std::to_string(round_k_) +
                        " decisions were not submitted");
  Round round;
  pending_.clear();
  for (std::size_t i = 0; i < subjects_.size(); ++i) {
    SubjectState& s = subjects_[i];
    if (s.cursor >= s.record.writings.size()) continue;
    round.items.push_back({s.record.subject_id, s.record.writings[s.cursor]});
    ++s.cursor;
    pending_.push_back(i);
  }
  if (round.items.empty()) return std::nullopt;
  round.k = ++round_k_;
  awaiting_decisions_ = true;
  return round;
}

void StreamRun::submit_decisions(const std::vector<DecisionRecord>& decisions) {
  if (!awaiting_decisions_) throw ProtocolError("no round is awaiting decisions");

  std::unordered_map<std::string, const DecisionRecord*> by_subject;
  for (const auto& d : decisions) {
    if (d.k != round_k_)
      throw ProtocolError("decision for round " + std::to_string(d.k) +
                          " submitted during round " + std::to_string(round_k_));
    if (!by_subject.emplace(d.subject_id, &d).second)
      throw DuplicateSubjectError("duplicate decision for subject " + d.subject_id);
    if (!std::isfinite(d.score)) throw Error("non-finite score for " + d.subject_id);
  }
  std::set<std::string> active;
  for (std::size_t i : pending_) active.insert(subjects_[i].record.subject_id);
  for (const auto& [id, d] : by_subject)
    if (!active.count(id)) throw UnknownSubjectError("subject " + id + " is not in this round");
  for (const auto& id : active)
    if (!by_subject.count(id)) throw MissingSubjectError("no decision for subject " + id);

  for (std::size_t i : pending_) {
    SubjectState& s = subjects_[i];
    const DecisionRecord& d = *by_subject.at(s.record.subject_id);
    int decision = s.finalized ? 1 : d.decision;  // sticky-positive
    if (decision == 1) s.finalized = true;
    log_.push_back({s.record.subject_id, round_k_, decision, d.score});
  }
  awaiting_decisions_ = false;
}

bool StreamRun::finished() const {
  if (awaiting_decisions_) return false;
  for (const auto& s : subjects_)
    if (s.cursor < s.record.writings.size()) return false;
  return true;
}

const DecisionLog& StreamRun::transcript() const {
  if (!finished()) throw RunNotFinishedError("run has not ended");
  return log_;
}

DecisionLog run_stream(std::vector<SubjectRecord> corpus,
                       const std::function<double(const std::string&)>& scorer,
                       const DecisionPolicy& policy) {
  StreamRun run(std::move(corpus));
  std::unordered_map<std::string, std::string> history;
  std::unordered_map<std::string, std::vector<double>> scores;
  while (auto round = run.next_round()) {
    std::vector<DecisionRecord> decisions;
    decisions.reserve(round->items.size());
    for (const auto& item : round->items) {
      std::string& text = history[item.subject_id];
      if (!text.empty()) text.push_back(' ');
      text += item.text;
      auto& hist = scores[item.subject_id];
      hist.push_back(std::clamp(scorer(text), 0.0, 1.0));
      decisions.push_back({item.subject_id, round->k, decide(policy, hist), hist.back()});
    }
    run.submit_decisions(decisions);
  }
  return run.transcript();
}

void serve_wire(StreamRun& run, std::istream& in, std::ostream& out) {
  while (auto round = run.next_round()) {
    json items = json::array();
    for (const auto& item : round->items)
      items.push_back({{"subject", item.subject_id}, {"text", item.text}});
    out << json{{"k", round->k}, {"items", items}}.dump() << '\n';
    out.flush();

    std::string line;
    if (!std::getline(in, line))
      throw ProtocolError("client closed the stream before round " +
                          std::to_string(round->k) + " decisions");
    json reply;
    try {
      reply = json::parse(line);
    } catch (const json::exception& e) {
      throw ProtocolError(std::string("malformed decision line: ") + e.what());
    }
    std::vector<DecisionRecord> decisions;
    if (!reply.contains("k") || !reply.contains("decisions") || !reply["decisions"].is_array())
      throw ProtocolError("decision line must carry 'k' and 'decisions'");
    for (const auto& d : reply["decisions"]) {
      decisions.push_back({d.at("subject").get<std::string>(), reply["k"].get<int>(),
                           d.at("decision").get<int>(), d.at("score").get<double>()});
    }
    run.submit_decisions(decisions);
  }
  out << json{{"end", true}}.dump() << '\n';
  out.flush();
}

DecisionLog load_decision_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open decision log: " + path.string());
  DecisionLog log;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw SchemaError(lineno, e.what());
    }
    try {
      log.push_back({j.at("subject").get<std::string>(), j.at("k").get<int>(),
                     j.at("decision").get<int>(), j.at("score").get<double>()});
    } catch (const json::exception& e) {
      throw SchemaError(lineno, e.what());
    }
  }
  return log;
}

void write_decision_log(const std::filesystem::path& path, const DecisionLog& log) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write decision log: " + path.string());
  for (const auto& d : log)
    out << json{{"subject", d.subject_id}, {"k", d.k}, {"decision", d.decision},
                {"score", d.score}}
               .dump()
        << '\n';
}

}  // namespace riskloom
