#include "riskloom/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

namespace riskloom {

using nlohmann::json;

double round2(double x) {
  double sign = x < 0.0 ? -1.0 : 1.0;
  return sign * std::floor(std::abs(x) * 100.0 + 0.5) / 100.0;
}

std::string format2(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", round2(x));
  return buf;
}

namespace {

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string row(const std::vector<std::string>& cells, std::size_t width = 9) {
  std::string out;
  for (const auto& c : cells) out += pad(c, width);
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

}  // namespace

std::string render_eval_table(const EvalReport& report) {
  std::ostringstream out;
  const MetricReport& m = report.decisions;
  out << row({"P", "R", "F1", "ERDE5", "ERDE50", "latencyT", "speed", "Flatency"}) << '\n';
  out << row({format2(m.precision), format2(m.recall), format2(m.f1), format2(m.erde_5),
              format2(m.erde_50), format2(m.latency_tp), format2(m.speed),
              format2(m.f_latency)})
      << '\n';
  if (!report.rankings.empty()) {
    out << '\n' << row({"writings", "P@10", "NDCG@10", "NDCG@100"}) << '\n';
    for (const auto& r : report.rankings) {
      auto cell = [&r](const char* key) {
        auto it = r.values.find(key);
        return it == r.values.end() ? std::string("-") : format2(it->second);
      };
      out << row({std::to_string(r.checkpoint), cell("P@10"), cell("NDCG@10"),
                  cell("NDCG@100")})
          << '\n';
    }
  }
  return out.str();
}

std::string eval_report_json(const EvalReport& report) {
  const MetricReport& m = report.decisions;
  json j;
  j["decisions"] = {{"precision", m.precision}, {"recall", m.recall},
                    {"f1", m.f1},               {"erde_5", m.erde_5},
                    {"erde_50", m.erde_50},     {"latency_tp", m.latency_tp},
                    {"speed", m.speed},         {"f_latency", m.f_latency}};
  json rankings = json::array();
  for (const auto& r : report.rankings) {
    json entry{{"writings", r.checkpoint}};
    for (const auto& [key, value] : r.values) entry[key] = value;
    rankings.push_back(entry);
  }
  j["rankings"] = rankings;
  return j.dump(2);
}

std::string render_assessment_table(const AssessmentReport& report) {
  std::ostringstream out;
  out << row({"DCHR", "ADODL", "ASHR"}) << '\n';
  out << row({format2(report.dchr_value), format2(report.adodl_value),
              format2(report.ashr_value)})
      << '\n';
  if (!report.rows.empty()) {
    out << '\n'
        << row({"persona", "pred", "truth", "pred_cat", "truth_cat"}, 12) << '\n';
    for (const auto& r : report.rows)
      out << row({r.persona, std::to_string(r.predicted_total),
                  std::to_string(r.truth_total), to_string(r.predicted_category),
                  to_string(r.truth_category)},
                 12)
          << '\n';
  }
  return out.str();
}

std::string assessment_report_json(const AssessmentReport& report) {
  json rows = json::array();
  for (const auto& r : report.rows)
    rows.push_back({{"persona", r.persona},
                    {"predicted_total", r.predicted_total},
                    {"truth_total", r.truth_total},
                    {"predicted_category", to_string(r.predicted_category)},
                    {"truth_category", to_string(r.truth_category)}});
  json j{{"dchr", report.dchr_value},
         {"adodl", report.adodl_value},
         {"ashr", report.ashr_value},
         {"personas", rows}};
  return j.dump(2);
}

namespace {

json label_stats_json(const LabelStats& s) {
  return {{"posts", s.posts},
          {"comments", s.comments},
          {"avg_comments_per_post", s.avg_comments},
          {"max_comments_per_post", s.max_comments},
          {"min_comments_per_post", s.min_comments},
          {"avg_words_per_post", s.avg_words_per_post},
          {"avg_self_comments_per_post", s.avg_self_comments}};
}

}  // namespace

std::string render_stats_table(const StatsReport& stats) {
  std::ostringstream out;
  out << row({"Group", "Posts", "Cmt.", "Avg.cmt", "Max.cmt", "Min.cmt", "Avg.words",
              "Avg.self"},
             10)
      << '\n';
  auto line = [&](const char* name, const LabelStats& s) {
    out << row({name, std::to_string(s.posts), std::to_string(s.comments),
                format2(s.avg_comments), std::to_string(s.max_comments),
                std::to_string(s.min_comments), format2(s.avg_words_per_post),
                format2(s.avg_self_comments)},
               10)
        << '\n';
  };
  line("Negative", stats.negative);
  line("Positive", stats.positive);
  line("Total", stats.overall);
  return out.str();
}

std::string stats_report_json(const StatsReport& stats) {
  json j{{"negative", label_stats_json(stats.negative)},
         {"positive", label_stats_json(stats.positive)},
         {"total", label_stats_json(stats.overall)}};
  return j.dump(2);
}

std::string render_interaction_stats(const InteractionStats& stats) {
  std::ostringstream out;
  out << row({"Runs", "Messages", "Msg/run", "Chars/msg"}, 10) << '\n';
  out << row({std::to_string(stats.runs), std::to_string(stats.messages),
              format2(stats.mean_messages_per_run), format2(stats.mean_chars_per_message)},
             10)
      << '\n';
  return out.str();
}

std::string interaction_stats_json(const InteractionStats& stats) {
  json j{{"runs", stats.runs},
         {"messages", stats.messages},
         {"mean_messages_per_run", stats.mean_messages_per_run},
         {"mean_chars_per_message", stats.mean_chars_per_message}};
  return j.dump(2);
}

}  // namespace riskloom
