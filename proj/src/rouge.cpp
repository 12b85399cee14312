#include "seneca/rouge.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>

namespace seneca::metrics {

namespace {

RougeScore from_counts(double overlap, double cand_total, double ref_total) {
  RougeScore s;
  s.precision = cand_total > 0 ? overlap / cand_total : 0.0;
  s.recall = ref_total > 0 ? overlap / ref_total : 0.0;
  double denom = s.precision + s.recall;
  s.f1 = denom > 0 ? 2.0 * s.precision * s.recall / denom : 0.0;
  return s;
}

std::map<Sentence, std::size_t> ngram_counts(const Sentence& tokens, std::size_t n) {
  std::map<Sentence, std::size_t> counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[Sentence(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                      tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

}  // namespace

RougeScore rouge_n(int n, const Sentence& candidate, const Sentence& reference) {
  if (n < 1) throw std::invalid_argument("rouge_n: n must be >= 1, got " + std::to_string(n));
  const auto un = static_cast<std::size_t>(n);
  auto cand = ngram_counts(candidate, un);
  auto ref = ngram_counts(reference, un);
  std::size_t overlap = 0;
  for (const auto& [gram, count] : cand) {
    auto it = ref.find(gram);
    if (it != ref.end()) overlap += std::min(count, it->second);
  }
  double cand_total = candidate.size() >= un ? static_cast<double>(candidate.size() - un + 1) : 0.0;
  double ref_total = reference.size() >= un ? static_cast<double>(reference.size() - un + 1) : 0.0;
  return from_counts(static_cast<double>(overlap), cand_total, ref_total);
}

std::size_t lcs_length(const Sentence& a, const Sentence& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

RougeScore rouge_l(const Sentence& candidate, const Sentence& reference) {
  return from_counts(static_cast<double>(lcs_length(candidate, reference)), static_cast<double>(candidate.size()),
                     static_cast<double>(reference.size()));
}

double rouge_reward(const Sentence& candidate, const Sentence& reference) {
  return 0.5 * (rouge_l(candidate, reference).f1 + rouge_n(2, candidate, reference).f1);
}

}  // namespace seneca::metrics
