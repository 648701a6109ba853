#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "riskloom/errors.hpp"

namespace riskloom {

inline constexpr std::size_t kSymptomCount = 21;

/// The 21 BDI symptom names in canonical order.
const std::array<std::string, kSymptomCount>& canonical_symptoms();

/// Case-insensitive lookup (internal whitespace collapsed) into the
/// canonical list.
std::optional<std::size_t> symptom_index(std::string_view name);

struct UnknownSymptomError : Error {
  std::string symptom;
  explicit UnknownSymptomError(std::string name)
      : Error("unknown symptom: " + name), symptom(std::move(name)) {}
};

struct ScoreOutOfRangeError : Error {
  using Error::Error;
};

/// 21 named scores in {0,1,2,3} plus the set of symptoms an evaluator has
/// actually mentioned. Freshly constructed vectors are all zeros with
/// nothing assessed.
class SymptomVector {
 public:
  int score_at(std::size_t index) const { return scores_[index]; }
  int score(std::string_view name) const;

  void set_at(std::size_t index, int value);
  void set(std::string_view name, int value);

  bool assessed_at(std::size_t index) const { return assessed_[index]; }
  bool assessed(std::string_view name) const;
  std::size_t assessed_count() const;
  bool all_assessed() const { return assessed_count() == kSymptomCount; }

  int total() const;

  friend bool operator==(const SymptomVector& a, const SymptomVector& b) {
    return a.scores_ == b.scores_;
  }

 private:
  std::array<int, kSymptomCount> scores_{};
  std::array<bool, kSymptomCount> assessed_{};
};

}  // namespace riskloom
