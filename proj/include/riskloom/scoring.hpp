#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "riskloom/errors.hpp"

namespace riskloom {

/// Weighted term table for the baseline scorer. Terms are matched against
/// lowercased, punctuation-trimmed whitespace tokens.
struct Lexicon {
  std::unordered_map<std::string, double> weights;

  /// Loads a "term<TAB>weight" TSV; blank lines and '#' comments ignored.
  static Lexicon load_tsv(const std::filesystem::path& path);
};

/// Turns a score history into a 0/1 decision.
struct DecisionPolicy {
  double threshold = 0.5;
  int min_rounds = 1;
  int consecutive_hits = 1;
};

/// Baseline score: s/(1+s) with s the weighted term count over
/// TARGET-tagged text only. Input without "[MSG] " markers is treated as
/// target text wholesale. Negative weighted sums clamp to zero.
double score_lexicon(std::string_view serialized, const Lexicon& lexicon);

/// 1 iff the history spans at least min_rounds rounds and its last
/// consecutive_hits scores are all >= threshold.
int decide(const DecisionPolicy& policy, const std::vector<double>& score_history);

struct RemoteScorerConfig {
  std::string endpoint;  // e.g. http://host:port/score
  int connect_timeout_ms = 2000;
  int read_timeout_ms = 5000;

  static RemoteScorerConfig from_env();  // reads RISKLOOM_SCORER_URL
};

struct TransportError : Error {
  using Error::Error;
};
struct BadResponseError : Error {
  using Error::Error;
};
struct ScorerTimeoutError : Error {
  using Error::Error;
};

/// POSTs {"text": ...} to the endpoint and expects {"score": ...} back,
/// clamped to [0,1].
double score_remote(std::string_view text, const RemoteScorerConfig& config);

}  // namespace riskloom
