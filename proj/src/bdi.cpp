#include "riskloom/bdi.hpp"

#include <cmath>
#include <cstdlib>

namespace riskloom {

const char* to_string(DepressionCategory category) {
  switch (category) {
    case DepressionCategory::Minimal: return "minimal";
    case DepressionCategory::Mild: return "mild";
    case DepressionCategory::Moderate: return "moderate";
    case DepressionCategory::Severe: return "severe";
  }
  return "?";
}

void CategoryCutoffs::validate() const {
  if (!(0 <= minimal_max && minimal_max < mild_max && mild_max < moderate_max &&
        moderate_max < 63))
    throw Error("category cutoffs must partition [0,63]");
}

int bdi_total(const SymptomVector& v) { return v.total(); }

DepressionCategory categorize(int total, const CategoryCutoffs& cutoffs) {
  cutoffs.validate();
  if (total < 0 || total > 63)
    throw OutOfRangeError("BDI total " + std::to_string(total) + " outside [0,63]");
  if (total <= cutoffs.minimal_max) return DepressionCategory::Minimal;
  if (total <= cutoffs.mild_max) return DepressionCategory::Mild;
  if (total <= cutoffs.moderate_max) return DepressionCategory::Moderate;
  return DepressionCategory::Severe;
}

namespace {

void check_lengths(const std::vector<SymptomVector>& preds,
                   const std::vector<SymptomVector>& truths) {
  if (preds.size() != truths.size() || preds.empty())
    throw LengthMismatchError("prediction/truth lists must have equal nonzero length");
}

}  // namespace

double dchr(const std::vector<SymptomVector>& preds,
            const std::vector<SymptomVector>& truths, const CategoryCutoffs& cutoffs) {
  check_lengths(preds, truths);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i)
    if (categorize(bdi_total(preds[i]), cutoffs) == categorize(bdi_total(truths[i]), cutoffs))
      ++hits;
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

double adodl(const std::vector<SymptomVector>& preds,
             const std::vector<SymptomVector>& truths) {
  check_lengths(preds, truths);
  double acc = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    int diff = std::abs(bdi_total(preds[i]) - bdi_total(truths[i]));
    acc += (63.0 - diff) / 63.0;
  }
  return acc / static_cast<double>(preds.size());
}

double ashr(const std::vector<SymptomVector>& preds,
            const std::vector<SymptomVector>& truths) {
  check_lengths(preds, truths);
  double acc = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    int matches = 0;
    for (std::size_t s = 0; s < kSymptomCount; ++s)
      if (preds[i].score_at(s) == truths[i].score_at(s)) ++matches;
    acc += static_cast<double>(matches) / static_cast<double>(kSymptomCount);
  }
  return acc / static_cast<double>(preds.size());
}

}  // namespace riskloom
