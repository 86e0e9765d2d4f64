#include "promptrank/porter_stemmer.h"

#include <functional>
#include <initializer_list>
#include <vector>

namespace promptrank {
namespace {

bool IsVowelLetter(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

std::vector<bool> ConsonantFlags(std::string_view w) {
  std::vector<bool> flags(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (IsVowelLetter(w[i])) {
      flags[i] = false;
    } else if (w[i] == 'y') {
      flags[i] = i == 0 ? true : !flags[i - 1];
    } else {
      flags[i] = true;
    }
  }
  return flags;
}

bool IsConsonant(std::string_view w, std::size_t i) { return ConsonantFlags(w.substr(0, i + 1))[i]; }

// Number of vowel-consonant transitions: the m in [C](VC){m}[V].
int Measure(std::string_view stem) {
  const auto flags = ConsonantFlags(stem);
  int m = 0;
  for (std::size_t i = 1; i < flags.size(); ++i) {
    if (!flags[i - 1] && flags[i]) ++m;
  }
  return m;
}

bool ContainsVowel(std::string_view stem) {
  for (bool c : ConsonantFlags(stem)) {
    if (!c) return true;
  }
  return false;
}

bool EndsDoubleConsonant(std::string_view w) {
  const std::size_t n = w.size();
  return n >= 2 && w[n - 1] == w[n - 2] && IsConsonant(w, n - 1);
}

// *o: ends consonant-vowel-consonant, the last not w, x or y.
bool EndsCvc(std::string_view w) {
  const std::size_t n = w.size();
  if (n < 3) return false;
  const auto flags = ConsonantFlags(w);
  const char last = w[n - 1];
  return flags[n - 3] && !flags[n - 2] && flags[n - 1] && last != 'w' && last != 'x' && last != 'y';
}

using Condition = std::function<bool(std::string_view stem)>;

struct Rule {
  std::string_view suffix;
  std::string_view replacement;
  Condition condition;  // empty: unconditional
};

// The first rule whose suffix matches decides the outcome, whether or not
// its condition holds.
std::string ApplyRules(const std::string& word, std::initializer_list<Rule> rules) {
  for (const Rule& r : rules) {
    if (!std::string_view(word).ends_with(r.suffix)) continue;
    const std::string stem = word.substr(0, word.size() - r.suffix.size());
    if (!r.condition || r.condition(stem)) return stem + std::string(r.replacement);
    return word;
  }
  return word;
}

bool PositiveMeasure(std::string_view stem) { return Measure(stem) > 0; }
bool MeasureAboveOne(std::string_view stem) { return Measure(stem) > 1; }

std::string Step1a(const std::string& w) {
  return ApplyRules(w, {{"sses", "ss", {}}, {"ies", "i", {}}, {"ss", "ss", {}}, {"s", "", {}}});
}

std::string Step1b(const std::string& w) {
  if (w.ends_with("eed")) {
    const std::string stem = w.substr(0, w.size() - 3);
    return Measure(stem) > 0 ? stem + "ee" : w;
  }
  std::string stem;
  bool removed = false;
  for (std::string_view suffix : {"ed", "ing"}) {
    if (!w.ends_with(suffix)) continue;
    stem = w.substr(0, w.size() - suffix.size());
    if (ContainsVowel(stem)) {
      removed = true;
      break;
    }
  }
  if (!removed) return w;
  if (stem.ends_with("at") || stem.ends_with("bl") || stem.ends_with("iz")) return stem + "e";
  if (EndsDoubleConsonant(stem)) {
    const char last = stem.back();
    if (last == 'l' || last == 's' || last == 'z') return stem;
    stem.pop_back();
    return stem;
  }
  if (Measure(stem) == 1 && EndsCvc(stem)) return stem + "e";
  return stem;
}

std::string Step1c(const std::string& w) { return ApplyRules(w, {{"y", "i", ContainsVowel}}); }

std::string Step2(const std::string& w) {
  return ApplyRules(w, {{"ational", "ate", PositiveMeasure}, {"tional", "tion", PositiveMeasure},
                        {"enci", "ence", PositiveMeasure},   {"anci", "ance", PositiveMeasure},
                        {"izer", "ize", PositiveMeasure},    {"abli", "able", PositiveMeasure},
                        {"alli", "al", PositiveMeasure},     {"entli", "ent", PositiveMeasure},
                        {"eli", "e", PositiveMeasure},       {"ousli", "ous", PositiveMeasure},
                        {"ization", "ize", PositiveMeasure}, {"ation", "ate", PositiveMeasure},
                        {"ator", "ate", PositiveMeasure},    {"alism", "al", PositiveMeasure},
                        {"iveness", "ive", PositiveMeasure}, {"fulness", "ful", PositiveMeasure},
                        {"ousness", "ous", PositiveMeasure}, {"aliti", "al", PositiveMeasure},
                        {"iviti", "ive", PositiveMeasure},   {"biliti", "ble", PositiveMeasure}});
}

std::string Step3(const std::string& w) {
  return ApplyRules(w, {{"icate", "ic", PositiveMeasure},
                        {"ative", "", PositiveMeasure},
                        {"alize", "al", PositiveMeasure},
                        {"iciti", "ic", PositiveMeasure},
                        {"ical", "ic", PositiveMeasure},
                        {"ful", "", PositiveMeasure},
                        {"ness", "", PositiveMeasure}});
}

std::string Step4(const std::string& w) {
  const Condition ion = [](std::string_view stem) {
    return Measure(stem) > 1 && (stem.back() == 's' || stem.back() == 't');
  };
  return ApplyRules(w, {{"al", "", MeasureAboveOne},   {"ance", "", MeasureAboveOne}, {"ence", "", MeasureAboveOne},
                        {"er", "", MeasureAboveOne},   {"ic", "", MeasureAboveOne},   {"able", "", MeasureAboveOne},
                        {"ible", "", MeasureAboveOne}, {"ant", "", MeasureAboveOne},  {"ement", "", MeasureAboveOne},
                        {"ment", "", MeasureAboveOne}, {"ent", "", MeasureAboveOne},  {"ion", "", ion},
                        {"ou", "", MeasureAboveOne},   {"ism", "", MeasureAboveOne},  {"ate", "", MeasureAboveOne},
                        {"iti", "", MeasureAboveOne},  {"ous", "", MeasureAboveOne},  {"ive", "", MeasureAboveOne},
                        {"ize", "", MeasureAboveOne}});
}

std::string Step5a(const std::string& w) {
  if (!w.ends_with('e')) return w;
  const std::string stem = w.substr(0, w.size() - 1);
  const int m = Measure(stem);
  if (m > 1 || (m == 1 && !EndsCvc(stem))) return stem;
  return w;
}

std::string Step5b(const std::string& w) {
  if (w.ends_with("ll") && Measure(std::string_view(w).substr(0, w.size() - 1)) > 1) return w.substr(0, w.size() - 1);
  return w;
}

}  // namespace

std::string PorterStem(std::string_view word) {
  std::string w(word);
  w = Step1a(w);
  w = Step1b(w);
  w = Step1c(w);
  w = Step2(w);
  w = Step3(w);
  w = Step4(w);
  w = Step5a(w);
  return Step5b(w);
}

}  // namespace promptrank
