#pragma once

#include <vector>
#include <string>

#include "riskloom/symptoms.hpp"

namespace riskloom {

enum class DepressionCategory { Minimal, Mild, Moderate, Severe };

const char* to_string(DepressionCategory category);

/// Inclusive upper bounds of the lower three bands; Severe covers the rest
/// up to 63. Defaults follow the eRisk severity convention.
struct CategoryCutoffs {
  int minimal_max = 9;
  int mild_max = 18;
  int moderate_max = 29;

  void validate() const;  // must partition [0,63] without gaps or overlap
};

struct OutOfRangeError : Error {
  using Error::Error;
};
struct LengthMismatchError : Error {
  using Error::Error;
};

/// Sum of the 21 symptom scores, in [0,63].
int bdi_total(const SymptomVector& v);

DepressionCategory categorize(int total, const CategoryCutoffs& cutoffs = {});

/// Fraction of personas whose predicted category equals the true one.
double dchr(const std::vector<SymptomVector>& preds,
            const std::vector<SymptomVector>& truths,
            const CategoryCutoffs& cutoffs = {});

/// Mean of (63 - |total(pred) - total(truth)|) / 63 over personas.
double adodl(const std::vector<SymptomVector>& preds,
            const std::vector<SymptomVector>& truths);

/// Mean fraction of exactly matched symptom scores per persona.
double ashr(const std::vector<SymptomVector>& preds,
            const std::vector<SymptomVector>& truths);

}  // namespace riskloom
