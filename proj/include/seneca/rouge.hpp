#pragma once

#include <cstddef>

#include "seneca/text.hpp"

namespace seneca::metrics {

using text::Sentence;

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Clipped n-gram overlap. Throws std::invalid_argument for n < 1.
RougeScore rouge_n(int n, const Sentence& candidate, const Sentence& reference);

std::size_t lcs_length(const Sentence& a, const Sentence& b);
RougeScore rouge_l(const Sentence& candidate, const Sentence& reference);

// Mean of ROUGE-L F1 and ROUGE-2 F1.
double rouge_reward(const Sentence& candidate, const Sentence& reference);

// Multi-sentence texts are scored as one concatenated token sequence.
inline RougeScore rouge_n(int n, const std::vector<Sentence>& candidate, const std::vector<Sentence>& reference) {
  return rouge_n(n, text::flatten(candidate), text::flatten(reference));
}
inline RougeScore rouge_l(const std::vector<Sentence>& candidate, const std::vector<Sentence>& reference) {
  return rouge_l(text::flatten(candidate), text::flatten(reference));
}
inline double rouge_reward(const std::vector<Sentence>& candidate, const std::vector<Sentence>& reference) {
  return rouge_reward(text::flatten(candidate), text::flatten(reference));
}

}  // namespace seneca::metrics
