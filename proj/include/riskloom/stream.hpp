#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "riskloom/corpus.hpp"

namespace riskloom {

struct RoundItem {
  std::string subject_id;
  std::string text;  // the subject's new writing this round
};

struct Round {
  int k = 0;  // 1-based round index
  std::vector<RoundItem> items;
};

struct DecisionRecord {
  std::string subject_id;
  int k = 0;
  int decision = 0;  // 0 or 1
  double score = 0.0;
};

using DecisionLog = std::vector<DecisionRecord>;

struct ProtocolError : Error {
  using Error::Error;
};
struct MissingSubjectError : Error {
  using Error::Error;
};
struct UnknownSubjectError : Error {
  using Error::Error;
};
struct DuplicateSubjectError : Error {
  using Error::Error;
};
struct RunNotFinishedError : Error {
  using Error::Error;
};

/// Replays a corpus one writing per subject per round. Decisions are
/// mandatory every round; once a subject is flagged positive its decision
/// is frozen at 1 (sticky-positive) while scores keep flowing for ranking.
class StreamRun {
 public:
  explicit StreamRun(std::vector<SubjectRecord> corpus);

  /// Next round, or nullopt once every subject's writings are exhausted.
  /// Throws ProtocolError if the previous round is still undecided.
  std::optional<Round> next_round();

  /// Records decisions for the pending round; they must cover exactly the
  /// subjects of that round.
  void submit_decisions(const std::vector<DecisionRecord>& decisions);

  bool finished() const;
  int rounds_played() const { return round_k_; }

  /// Full decision log; only available once the run has ended.
  const DecisionLog& transcript() const;

 private:
  struct SubjectState {
    SubjectRecord record;
    std::size_t cursor = 0;
    bool finalized = false;
  };
  std::vector<SubjectState> subjects_;
  std::vector<std::size_t> pending_;  // indices served in the open round
  int round_k_ = 0;
  bool awaiting_decisions_ = false;
  DecisionLog log_;
};

/// Drives a full run with a scoring callback: the scorer sees the subject's
/// accumulated text so far and returns a score in [0,1]; the policy turns
/// score histories into decisions.
struct DecisionPolicy;
DecisionLog run_stream(std::vector<SubjectRecord> corpus,
                       const std::function<double(const std::string&)>& scorer,
                       const DecisionPolicy& policy);

/// Line-delimited wire protocol: for every round the server writes
/// {"k": ..., "items": [{"subject": ..., "text": ...}]} and reads back
/// {"k": ..., "decisions": [{"subject": ..., "decision": ..., "score": ...}]};
/// a final {"end": true} line closes the session.
void serve_wire(StreamRun& run, std::istream& in, std::ostream& out);

DecisionLog load_decision_log(const std::filesystem::path& path);
void write_decision_log(const std::filesystem::path& path, const DecisionLog& log);

}  // namespace riskloom
