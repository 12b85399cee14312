#pragma once

#include <set>
#include <string>
#include <vector>

#include "seneca/text.hpp"

namespace seneca::oracle {

using text::Sentence;

struct SelectionLabel {
  std::string article_id;
  std::vector<int> indices;  // decoder target order; the stop marker is implicit

  bool operator==(const SelectionLabel&) const = default;
};

// Repeatedly adds the sentence giving the largest strict gain in ROUGE-2 F1 of
// the selection (concatenated in document order) against the reference.
// Ties go to the lowest index. Returned in pick order.
std::vector<int> greedy_rouge2_selection(const std::vector<Sentence>& article, const std::vector<Sentence>& reference);

// Article sentences whose best ROUGE-L recall against a single reference
// sentence (LCS / |reference sentence|) is strictly above the threshold.
std::set<int> augment_by_rougeL_recall(const std::vector<Sentence>& article, const std::vector<Sentence>& reference,
                                       double threshold = 0.5);

// Greedy picks in pick order, then augmented indices ascending. Falls back to
// the first two sentences (or the only one) when both are empty.
SelectionLabel build_labels(const text::Article& article, const std::vector<Sentence>& reference);
inline SelectionLabel build_labels(const text::Article& article) { return build_labels(article, article.summary); }

// Selection text with sentences in document order.
Sentence concat_selection(const std::vector<Sentence>& article, std::vector<int> indices);

}  // namespace seneca::oracle
