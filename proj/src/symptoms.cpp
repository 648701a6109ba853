#include "riskloom/symptoms.hpp"

#include <cctype>
#include <unordered_map>

namespace riskloom {

const std::array<std::string, kSymptomCount>& canonical_symptoms() {
  static const std::array<std::string, kSymptomCount> names = {
      "Sadness",
      "Pessimism",
      "Past Failure",
      "Loss of Pleasure",
      "Guilty Feelings",
      "Punishment Feelings",
      "Self-Dislike",
      "Self-Criticalness",
      "Suicidal Thoughts or Wishes",
      "Crying",
      "Agitation",
      "Loss of Interest",
      "Indecisiveness",
      "Worthlessness",
      "Loss of Energy",
      "Changes in Sleeping Pattern",
      "Irritability",
      "Changes in Appetite",
      "Concentration Difficulty",
      "Tiredness or Fatigue",
      "Loss of Interest in Sex",
  };
  return names;
}

namespace {

std::string normalize_name(std::string_view name) {
  std::string out;
  out.reserve(name.size());
  bool pending_space = false;
  for (char c : name) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!out.empty()) pending_space = true;
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

}  // namespace

std::optional<std::size_t> symptom_index(std::string_view name) {
  static const std::unordered_map<std::string, std::size_t> index = [] {
    std::unordered_map<std::string, std::size_t> m;
    const auto& names = canonical_symptoms();
    for (std::size_t i = 0; i < names.size(); ++i) m.emplace(normalize_name(names[i]), i);
    return m;
  }();
  auto it = index.find(normalize_name(name));
  if (it == index.end()) return std::nullopt;
  return it->second;
}

int SymptomVector::score(std::string_view name) const {
  auto idx = symptom_index(name);
  if (!idx) throw UnknownSymptomError(std::string(name));
  return scores_[*idx];
}

void SymptomVector::set_at(std::size_t index, int value) {
  if (value < 0 || value > 3)
    throw ScoreOutOfRangeError("symptom score " + std::to_string(value) +
                               " outside {0,1,2,3}");
  scores_[index] = value;
  assessed_[index] = true;
}

void SymptomVector::set(std::string_view name, int value) {
  auto idx = symptom_index(name);
  if (!idx) throw UnknownSymptomError(std::string(name));
  set_at(*idx, value);
}

bool SymptomVector::assessed(std::string_view name) const {
  auto idx = symptom_index(name);
  if (!idx) throw UnknownSymptomError(std::string(name));
  return assessed_[*idx];
}

std::size_t SymptomVector::assessed_count() const {
  std::size_t n = 0;
  for (bool b : assessed_)
    if (b) ++n;
  return n;
}

int SymptomVector::total() const {
  int sum = 0;
  for (int s : scores_) sum += s;
  return sum;
}

}  // namespace riskloom
