#pragma once

#include <ostream>
#include <vector>

#include "seneca/mentions.hpp"

namespace seneca::rewards {

using text::Sentence;

struct RewardConfig {
  double gamma_coh = 0.01;
  double gamma_ref = 0.005;
  double gamma_app = 0.005;
  bool use_coh = false;
  bool use_ref = false;
  bool use_app = false;
};

struct RewardBreakdown {
  double r_rouge = 0.0;
  double r_coh = 0.0;
  double r_ref = 0.0;
  double r_app = 0.0;
  double total = 0.0;
};

// -1 when a third-person or possessive pronoun appears before the first
// noun-phrase onset of the summary, else 0. An onset is a lexicon noun, a
// first name or honorific, or a determiner followed by a non-pronoun.
double referential_clarity_reward(const std::vector<Sentence>& summary,
                                  const text::Lexicons& lex = text::Lexicons::bundled());

// -1 when some sentence has two or more commas and the token after its first
// comma is a determiner or possessive, else 0.
double apposition_reward(const std::vector<Sentence>& summary);

// A comma directly followed by who, which, where or whose.
bool has_relative_clause(const std::vector<Sentence>& summary);

// Fills total from the other fields; disabled terms contribute nothing.
RewardBreakdown mix_reward(RewardBreakdown parts, const RewardConfig& cfg);

struct QualityStats {
  std::size_t count = 0;
  double ref_pct = 0.0;
  double relcl_pct = 0.0;
  double app_pct = 0.0;
};

QualityStats corpus_quality_stats(const std::vector<std::vector<Sentence>>& summaries,
                                  const std::vector<std::vector<Sentence>>& references,
                                  const text::Lexicons& lex = text::Lexicons::bundled());
void write_quality_csv(std::ostream& out, const QualityStats& stats);

}  // namespace seneca::rewards
