#include "seneca/rewards.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <stdexcept>
#include <string_view>

namespace seneca::rewards {

namespace {

constexpr std::array<std::string_view, 7> kPersonal = {"he", "him", "she", "her", "it", "they", "them"};
constexpr std::array<std::string_view, 6> kPossessive = {"his", "hers", "its", "their", "theirs", "her"};
constexpr std::array<std::string_view, 12> kAppositionTrigger = {"a",   "an",  "the", "this", "that",  "these",
                                                                 "those", "his", "her", "its",  "their", "whose"};
constexpr std::array<std::string_view, 4> kRelative = {"who", "which", "where", "whose"};

template <std::size_t N>
bool in(const std::array<std::string_view, N>& set, const std::string& t) {
  return std::find(set.begin(), set.end(), t) != set.end();
}

std::string lowered(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

bool is_pronoun(const std::string& t) { return in(kPersonal, t) || in(kPossessive, t); }

}  // namespace

double referential_clarity_reward(const std::vector<Sentence>& summary, const text::Lexicons& lex) {
  Sentence tokens;
  for (const auto& s : summary)
    for (const auto& t : s) tokens.push_back(lowered(t));
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto& t = tokens[i];
    if (is_pronoun(t)) return -1.0;
    if (lex.is_noun(t) || lex.is_first_name(t) || lex.is_honorific(t)) return 0.0;
    if (lex.is_determiner(t) && i + 1 < tokens.size() && !is_pronoun(tokens[i + 1])) return 0.0;
  }
  return 0.0;
}

double apposition_reward(const std::vector<Sentence>& summary) {
  for (const auto& s : summary) {
    if (std::count(s.begin(), s.end(), ",") < 2) continue;
    auto first = std::find(s.begin(), s.end(), ",");
    if (first + 1 != s.end() && in(kAppositionTrigger, lowered(*(first + 1)))) return -1.0;
  }
  return 0.0;
}

bool has_relative_clause(const std::vector<Sentence>& summary) {
  for (const auto& s : summary)
    for (std::size_t i = 0; i + 1 < s.size(); ++i)
      if (s[i] == "," && in(kRelative, lowered(s[i + 1]))) return true;
  return false;
}

RewardBreakdown mix_reward(RewardBreakdown parts, const RewardConfig& cfg) {
  parts.total = parts.r_rouge;
  if (cfg.use_coh) parts.total += cfg.gamma_coh * parts.r_coh;
  if (cfg.use_ref) parts.total += cfg.gamma_ref * parts.r_ref;
  if (cfg.use_app) parts.total += cfg.gamma_app * parts.r_app;
  return parts;
}

QualityStats corpus_quality_stats(const std::vector<std::vector<Sentence>>& summaries,
                                  const std::vector<std::vector<Sentence>>& references, const text::Lexicons& lex) {
  if (summaries.size() != references.size()) {
    throw std::invalid_argument("corpus_quality_stats: " + std::to_string(summaries.size()) + " summaries vs " +
                                std::to_string(references.size()) + " references");
  }
  if (summaries.empty()) throw std::invalid_argument("corpus_quality_stats: empty corpus");
  QualityStats st;
  st.count = summaries.size();
  std::size_t ref = 0, relcl = 0, app = 0;
  for (const auto& s : summaries) {
    ref += referential_clarity_reward(s, lex) < 0;
    relcl += has_relative_clause(s);
    app += apposition_reward(s) < 0;
  }
  const double n = static_cast<double>(st.count);
  st.ref_pct = 100.0 * static_cast<double>(ref) / n;
  st.relcl_pct = 100.0 * static_cast<double>(relcl) / n;
  st.app_pct = 100.0 * static_cast<double>(app) / n;
  return st;
}

void write_quality_csv(std::ostream& out, const QualityStats& stats) {
  out << "summaries,ref_pct,relcl_pct,app_pct\n"
      << stats.count << ',' << stats.ref_pct << ',' << stats.relcl_pct << ',' << stats.app_pct << '\n';
}

}  // namespace seneca::rewards
