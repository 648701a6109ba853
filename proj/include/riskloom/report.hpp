#pragma once

#include <map>
#include <string>
#include <vector>

#include "riskloom/bdi.hpp"
#include "riskloom/corpus.hpp"
#include "riskloom/dialogue.hpp"
#include "riskloom/metrics.hpp"

namespace riskloom {

/// Two-decimal half-up rounding as printed in the result tables.
double round2(double x);
std::string format2(double x);

struct RankingRow {
  int checkpoint = 0;  // writings processed
  std::map<std::string, double> values;  // e.g. "P@10" -> 1.0
};

struct EvalReport {
  MetricReport decisions;
  std::vector<RankingRow> rankings;
};

/// Aligned-text table with the decision columns (P, R, F1, ERDE5, ERDE50,
/// latencyT, speed, Flatency) and one ranking row per checkpoint.
std::string render_eval_table(const EvalReport& report);
std::string eval_report_json(const EvalReport& report);  // full precision

struct AssessmentRow {
  std::string persona;
  int predicted_total = 0;
  int truth_total = 0;
  DepressionCategory predicted_category = DepressionCategory::Minimal;
  DepressionCategory truth_category = DepressionCategory::Minimal;
};

struct AssessmentReport {
  double dchr_value = 0.0;
  double adodl_value = 0.0;
  double ashr_value = 0.0;
  std::vector<AssessmentRow> rows;
};

std::string render_assessment_table(const AssessmentReport& report);
std::string assessment_report_json(const AssessmentReport& report);

std::string render_stats_table(const StatsReport& stats);
std::string stats_report_json(const StatsReport& stats);

std::string render_interaction_stats(const InteractionStats& stats);
std::string interaction_stats_json(const InteractionStats& stats);

}  // namespace riskloom
