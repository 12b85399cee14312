#include "seneca/oracle.hpp"

#include <algorithm>
#include <stdexcept>

#include "seneca/rouge.hpp"

namespace seneca::oracle {

Sentence concat_selection(const std::vector<Sentence>& article, std::vector<int> indices) {
  std::sort(indices.begin(), indices.end());
  Sentence out;
  for (int i : indices) {
    const auto& s = article.at(static_cast<std::size_t>(i));
    out.insert(out.end(), s.begin(), s.end());
  }
  return out;
}

std::vector<int> greedy_rouge2_selection(const std::vector<Sentence>& article, const std::vector<Sentence>& reference) {
  const Sentence ref = text::flatten(reference);
  std::vector<int> picked;
  std::vector<bool> used(article.size(), false);
  double current = 0.0;
  while (true) {
    int best = -1;
    double best_f1 = current;
    for (std::size_t i = 0; i < article.size(); ++i) {
      if (used[i]) continue;
      auto trial = picked;
      trial.push_back(static_cast<int>(i));
      double f1 = metrics::rouge_n(2, concat_selection(article, trial), ref).f1;
      if (f1 > best_f1) {
        best_f1 = f1;
        best = static_cast<int>(i);
      }
    }
    if (best < 0) break;
    used[static_cast<std::size_t>(best)] = true;
    picked.push_back(best);
    current = best_f1;
  }
  return picked;
}

std::set<int> augment_by_rougeL_recall(const std::vector<Sentence>& article, const std::vector<Sentence>& reference,
                                       double threshold) {
  std::set<int> out;
  for (std::size_t i = 0; i < article.size(); ++i) {
    double best = 0.0;
    for (const auto& r : reference) best = std::max(best, metrics::rouge_l(article[i], r).recall);
    if (best > threshold) out.insert(static_cast<int>(i));
  }
  return out;
}

SelectionLabel build_labels(const text::Article& article, const std::vector<Sentence>& reference) {
  if (article.sentences.empty()) throw std::invalid_argument("build_labels: article '" + article.id + "' is empty");
  SelectionLabel label{article.id, greedy_rouge2_selection(article.sentences, reference)};
  for (int i : augment_by_rougeL_recall(article.sentences, reference)) {
    if (std::find(label.indices.begin(), label.indices.end(), i) == label.indices.end()) label.indices.push_back(i);
  }
  if (label.indices.empty()) {
    label.indices.push_back(0);
    if (article.sentences.size() > 1) label.indices.push_back(1);
  }
  return label;
}

}  // namespace seneca::oracle
