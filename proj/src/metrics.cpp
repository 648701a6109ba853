#include "riskloom/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include <json.hpp>

namespace riskloom {

using nlohmann::json;

FirstPositive first_positive(const DecisionLog& log) {
  FirstPositive fp;
  for (const auto& d : log) {
    auto [it, inserted] = fp.try_emplace(d.subject_id, std::nullopt);
    if (d.decision == 1 && (!it->second || d.k < *it->second)) it->second = d.k;
  }
  return fp;
}

Truth load_truth_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open truth file: " + path.string());
  Truth truth;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
      truth[j.at("subject").get<std::string>()] = j.at("label").get<int>();
    } catch (const json::exception& e) {
      throw SchemaError(lineno, e.what());
    }
  }
  return truth;
}

namespace {

void check_keys(const FirstPositive& flagged, const Truth& truth) {
  if (flagged.size() != truth.size())
    throw KeyMismatchError("decision and truth subject sets differ in size");
  for (const auto& [id, k] : flagged)
    if (!truth.count(id)) throw KeyMismatchError("subject " + id + " missing from truth");
}

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

PRF1 prf1(const FirstPositive& flagged, const Truth& truth) {
  check_keys(flagged, truth);
  std::size_t tp = 0, fp = 0, fn = 0;
  for (const auto& [id, k] : flagged) {
    bool predicted = k.has_value();
    bool actual = truth.at(id) == 1;
    if (predicted && actual)
      ++tp;
    else if (predicted && !actual)
      ++fp;
    else if (!predicted && actual)
      ++fn;
  }
  PRF1 r;
  if (tp + fp > 0) r.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn > 0) r.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (r.precision + r.recall > 0.0)
    r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

ErdeParams standard_erde_params(int o, const Truth& truth) {
  ErdeParams params;
  params.o = o;
  std::size_t positives = 0;
  for (const auto& [id, label] : truth)
    if (label == 1) ++positives;
  params.c_fp =
      truth.empty() ? 0.0 : static_cast<double>(positives) / static_cast<double>(truth.size());
  return params;
}

double erde(const FirstPositive& flagged, const Truth& truth, const ErdeParams& params) {
  check_keys(flagged, truth);
  if (flagged.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& [id, k] : flagged) {
    bool actual = truth.at(id) == 1;
    if (k && !actual) {
      sum += params.c_fp;
    } else if (!k && actual) {
      sum += params.c_fn;
    } else if (k && actual) {
      double lc = 1.0 - 1.0 / (1.0 + std::exp(static_cast<double>(*k - params.o)));
      sum += params.c_tp * lc;
    }
  }
  return sum / static_cast<double>(flagged.size());
}

LatencySpeed latency_speed(const FirstPositive& flagged, const Truth& truth, double p) {
  check_keys(flagged, truth);
  std::vector<double> latencies;
  std::vector<double> speeds;
  for (const auto& [id, k] : flagged) {
    if (!k || truth.at(id) != 1) continue;
    double kd = static_cast<double>(*k);
    latencies.push_back(kd);
    double penalty = -1.0 + 2.0 / (1.0 + std::exp(-p * (kd - 1.0)));
    speeds.push_back(1.0 - penalty);
  }
  if (latencies.empty()) throw NoTruePositivesError("no true positive was ever flagged");
  return {median(std::move(latencies)), median(std::move(speeds))};
}

double f_latency(double f1, double speed) { return f1 * speed; }

double precision_at_k(const std::vector<std::string>& ranking, const Truth& truth,
                      std::size_t k) {
  if (k == 0 || k > ranking.size())
    throw KShortRankingError("ranking of size " + std::to_string(ranking.size()) +
                             " cannot be cut at " + std::to_string(k));
  std::size_t hits = 0;
  for (std::size_t i = 0; i < k; ++i) {
    auto it = truth.find(ranking[i]);
    if (it == truth.end()) throw KeyMismatchError("subject " + ranking[i] + " missing from truth");
    if (it->second == 1) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(k);
}

double ndcg_at_k(const std::vector<std::string>& ranking, const Truth& truth,
                 std::size_t k) {
  if (k == 0 || k > ranking.size())
    throw KShortRankingError("ranking of size " + std::to_string(ranking.size()) +
                             " cannot be cut at " + std::to_string(k));
  double dcg = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    auto it = truth.find(ranking[i]);
    if (it == truth.end()) throw KeyMismatchError("subject " + ranking[i] + " missing from truth");
    if (it->second == 1) dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  }
  std::size_t positives = 0;
  for (const auto& id : ranking)
    if (truth.at(id) == 1) ++positives;
  if (positives == 0) return 0.0;
  double idcg = 0.0;
  for (std::size_t i = 0; i < std::min(positives, k); ++i)
    idcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  return dcg / idcg;
}

std::vector<std::string> ranking_at_checkpoint(const DecisionLog& log, int checkpoint) {
  std::unordered_map<std::string, std::pair<int, double>> latest;  // k, score
  for (const auto& d : log) {
    if (d.k > checkpoint) continue;
    auto [it, inserted] = latest.try_emplace(d.subject_id, d.k, d.score);
    if (!inserted && d.k > it->second.first) it->second = {d.k, d.score};
  }
  std::vector<std::pair<std::string, double>> rows;
  rows.reserve(latest.size());
  for (const auto& [id, ks] : latest) rows.emplace_back(id, ks.second);
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> ranking;
  ranking.reserve(rows.size());
  for (auto& [id, score] : rows) ranking.push_back(std::move(id));
  return ranking;
}

MetricReport evaluate_decisions(const DecisionLog& log, const Truth& truth, int o5,
                                int o50, double p) {
  FirstPositive fp = first_positive(log);
  MetricReport report;
  PRF1 r = prf1(fp, truth);
  report.precision = r.precision;
  report.recall = r.recall;
  report.f1 = r.f1;
  report.erde_5 = erde(fp, truth, standard_erde_params(o5, truth));
  report.erde_50 = erde(fp, truth, standard_erde_params(o50, truth));
  LatencySpeed ls = latency_speed(fp, truth, p);
  report.latency_tp = ls.latency_tp;
  report.speed = ls.speed;
  report.f_latency = f_latency(report.f1, report.speed);
  return report;
}

}  // namespace riskloom
