#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "riskloom/stream.hpp"

namespace riskloom {

/// Round of the first positive decision per subject; nullopt = never flagged.
using FirstPositive = std::map<std::string, std::optional<int>>;

/// Gold labels per subject.
using Truth = std::map<std::string, int>;

struct KeyMismatchError : Error {
  using Error::Error;
};
struct NoTruePositivesError : Error {
  using Error::Error;
};
struct KShortRankingError : Error {
  using Error::Error;
};

FirstPositive first_positive(const DecisionLog& log);
Truth load_truth_jsonl(const std::filesystem::path& path);

struct PRF1 {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Binary precision/recall/F1 with "ever flagged" as the predicted positive.
PRF1 prf1(const FirstPositive& flagged, const Truth& truth);

/// ERDE cost parameters. The per-subject cost is c_fp for a false positive,
/// c_fn for a miss, and c_tp * (1 - 1/(1+e^(k-o))) for a true positive first
/// flagged at round k.
struct ErdeParams {
  int o = 5;
  double c_fp = 0.0;
  double c_fn = 1.0;
  double c_tp = 1.0;
};

/// Standard eRisk costs: c_fn = c_tp = 1, c_fp = positives/total.
ErdeParams standard_erde_params(int o, const Truth& truth);

double erde(const FirstPositive& flagged, const Truth& truth, const ErdeParams& params);

inline constexpr double kSpeedPenaltySlope = 0.0078;

struct LatencySpeed {
  double latency_tp = 0.0;  // median first-positive round over true positives
  double speed = 0.0;       // median of 1 - penalty(k) over the same set
};

/// penalty(k) = -1 + 2/(1+e^(-p*(k-1))); speed(k=1) is exactly 1.
LatencySpeed latency_speed(const FirstPositive& flagged, const Truth& truth,
                           double p = kSpeedPenaltySlope);

double f_latency(double f1, double speed);

/// Fraction of the top k of a ranking that is truly positive.
double precision_at_k(const std::vector<std::string>& ranking, const Truth& truth,
                      std::size_t k);

/// Binary-relevance NDCG with log2(i+1) discount; 0 when no positives exist.
double ndcg_at_k(const std::vector<std::string>& ranking, const Truth& truth,
                 std::size_t k);

/// Subjects ordered by their score at the given checkpoint (the record with
/// the largest round <= checkpoint), descending, ties broken by subject id.
std::vector<std::string> ranking_at_checkpoint(const DecisionLog& log, int checkpoint);

struct MetricReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double erde_5 = 0.0;
  double erde_50 = 0.0;
  double latency_tp = 0.0;
  double speed = 0.0;
  double f_latency = 0.0;
};

/// All decision-based measures for one log. Throws NoTruePositivesError
/// when no true positive was ever flagged.
MetricReport evaluate_decisions(const DecisionLog& log, const Truth& truth, int o5 = 5,
                                int o50 = 50, double p = kSpeedPenaltySlope);

}  // namespace riskloom
