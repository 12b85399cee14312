#include "seneca/mentions.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace seneca::text {

namespace {

std::vector<std::pair<std::string, std::string>> read_entries(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("lexicon: cannot read " + path.string());
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    std::string token, tag;
    if (!(fields >> token) || token[0] == '#') continue;
    fields >> tag;
    out.emplace_back(token, tag);
  }
  return out;
}

Gender parse_gender(const std::string& tag) {
  if (tag == "m") return Gender::male;
  if (tag == "f") return Gender::female;
  return Gender::unknown;
}

PronounClass parse_pronoun(const std::string& tag, const std::string& token) {
  if (tag == "masculine") return PronounClass::masculine;
  if (tag == "feminine") return PronounClass::feminine;
  if (tag == "neuter") return PronounClass::neuter;
  if (tag == "plural") return PronounClass::plural;
  throw std::runtime_error("lexicon: pronoun '" + token + "' has unknown class '" + tag + "'");
}

bool is_punct(const std::string& t) {
  auto c = static_cast<unsigned char>(t[0]);
  return c < 0x80 && !std::isalnum(c) && c != '\'';
}

struct Position {
  std::size_t sentence;
  std::size_t start;
  bool operator<(const Position& o) const {
    return sentence != o.sentence ? sentence < o.sentence : start < o.start;
  }
};

struct Candidate {
  Mention mention;
  Gender gender = Gender::unknown;
  bool thing = false;  // headed by a non-person lexicon noun
  Sentence normalized;
  PronounClass pronoun = PronounClass::neuter;
};

struct Working {
  std::vector<Mention> mentions;
  std::vector<Sentence> nominal_forms;
  Gender gender = Gender::unknown;
  bool conflict = false;
  bool all_things = true;
  bool has_nominal = false;

  Position last() const { return {mentions.back().sentence_index, mentions.back().start}; }

  void note_gender(Gender g) {
    if (g == Gender::unknown || conflict) return;
    if (gender == Gender::unknown) {
      gender = g;
    } else if (gender != g) {
      gender = Gender::unknown;
      conflict = true;
    }
  }

  bool accepts(PronounClass p) const {
    if (!has_nominal) return false;
    if (gender == Gender::male) return p == PronounClass::masculine;
    if (gender == Gender::female) return p == PronounClass::feminine;
    if (all_things) return p == PronounClass::neuter || p == PronounClass::plural;
    return p == PronounClass::masculine || p == PronounClass::feminine || p == PronounClass::plural;
  }
};

bool is_suffix(const Sentence& shorter, const Sentence& longer) {
  if (shorter.empty() || shorter.size() > longer.size()) return false;
  return std::equal(shorter.rbegin(), shorter.rend(), longer.rbegin());
}

bool corefer(const Sentence& a, const Sentence& b) {
  if (a.empty() || b.empty()) return false;
  return a.back() == b.back() || is_suffix(a, b) || is_suffix(b, a);
}

class Detector {
 public:
  Detector(const Article& a, const Lexicons& lex) : article_(a), lex_(lex) {
    for (std::size_t s = 0; s < a.sentences.size(); ++s)
      for (std::size_t i = 1; i < a.sentences[s].size(); ++i)
        if (a.cased(s, i)) known_proper_.insert(a.sentences[s][i]);
  }

  std::vector<Candidate> run() const {
    std::vector<Candidate> out;
    for (std::size_t s = 0; s < article_.sentences.size(); ++s) scan(s, out);
    return out;
  }

 private:
  bool closed_class(const std::string& t) const {
    return is_punct(t) || t == "0" || lex_.is_determiner(t) || lex_.is_pronoun(t) || lex_.is_function_word(t);
  }

  bool name_like(std::size_t s, std::size_t i) const {
    const auto& t = article_.sentences[s][i];
    if (closed_class(t)) return false;
    if (lex_.is_honorific(t) || lex_.is_first_name(t)) return true;
    if (!article_.cased(s, i)) return false;
    return i > 0 || known_proper_.count(t) > 0;
  }

  bool modifier(const std::string& t) const { return !closed_class(t) && !lex_.is_noun(t); }

  Candidate make(std::size_t s, std::size_t b, std::size_t e) const {
    const auto& toks = article_.sentences[s];
    Candidate c;
    c.mention = {s, b, e, Sentence(toks.begin() + b, toks.begin() + e), MentionKind::nominal};
    for (std::size_t i = b; i < e; ++i) {
      const auto& t = toks[i];
      if (auto h = lex_.honorifics.find(t); h != lex_.honorifics.end()) {
        if (c.gender == Gender::unknown) c.gender = h->second;
        continue;
      }
      if (lex_.is_determiner(t) || is_punct(t)) continue;
      if (auto f = lex_.first_names.find(t); f != lex_.first_names.end() && c.gender == Gender::unknown) {
        c.gender = f->second;
      }
      c.normalized.push_back(t);
    }
    if (c.normalized.empty()) c.normalized.push_back(toks[e - 1]);
    auto n = lex_.nouns.find(c.normalized.back());
    c.thing = n != lex_.nouns.end() && !n->second && !name_like(s, e - 1);
    return c;
  }

  void scan(std::size_t s, std::vector<Candidate>& out) const {
    const auto& toks = article_.sentences[s];
    const std::size_t n = toks.size();
    std::size_t i = 0;
    while (i < n) {
      const auto& t = toks[i];
      if (name_like(s, i)) {
        std::size_t j = i + 1;
        while (j < n) {
          if (name_like(s, j)) {
            ++j;
          } else if (toks[j] == "." && lex_.is_honorific(toks[j - 1]) && j + 1 < n && name_like(s, j + 1)) {
            j += 2;
          } else {
            break;
          }
        }
        out.push_back(make(s, i, j));
        i = j;
        continue;
      }
      if (lex_.is_determiner(t)) {
        std::size_t k = i + 1;
        while (k < n && k <= i + 4 && !lex_.is_noun(toks[k]) && modifier(toks[k]) && !name_like(s, k)) ++k;
        if (k < n && lex_.is_noun(toks[k])) {
          std::size_t e = k + 1;
          while (e < n && lex_.is_noun(toks[e])) ++e;
          out.push_back(make(s, i, e));
          i = e;
          continue;
        }
        ++i;
        continue;
      }
      if (lex_.is_noun(t)) {
        std::size_t e = i + 1;
        while (e < n && lex_.is_noun(toks[e])) ++e;
        out.push_back(make(s, i, e));
        i = e;
        continue;
      }
      if (auto p = lex_.pronouns.find(t); p != lex_.pronouns.end()) {
        Candidate c;
        c.mention = {s, i, i + 1, Sentence{t}, MentionKind::pronominal};
        c.pronoun = p->second;
        c.normalized = {t};
        out.push_back(std::move(c));
      }
      ++i;
    }
  }

  const Article& article_;
  const Lexicons& lex_;
  std::set<std::string> known_proper_;
};

}  // namespace

Lexicons Lexicons::load(const std::filesystem::path& dir) {
  Lexicons lex;
  for (auto& [t, tag] : read_entries(dir / "determiners.txt")) lex.determiners.insert(t);
  for (auto& [t, tag] : read_entries(dir / "pronouns.txt")) lex.pronouns[t] = parse_pronoun(tag, t);
  for (auto& [t, tag] : read_entries(dir / "honorifics.txt")) lex.honorifics[t] = parse_gender(tag);
  for (auto& [t, tag] : read_entries(dir / "first_names.txt")) lex.first_names[t] = parse_gender(tag);
  for (auto& [t, tag] : read_entries(dir / "nouns.txt")) lex.nouns[t] = tag == "person";
  for (auto& [t, tag] : read_entries(dir / "function_words.txt")) lex.function_words.insert(t);
  return lex;
}

std::filesystem::path Lexicons::default_dir() {
  if (const char* env = std::getenv("SENECA_RESOURCES"); env && *env) return env;
  return SENECA_RESOURCE_DIR;
}

const Lexicons& Lexicons::bundled() {
  static const Lexicons lex = load(default_dir());
  return lex;
}

std::vector<MentionCluster> extract_mention_clusters(const Article& article, const Lexicons& lex) {
  auto candidates = Detector(article, lex).run();
  std::vector<Working> clusters;
  for (auto& c : candidates) {
    const auto& m = c.mention;
    if (m.kind == MentionKind::nominal) {
      int best = -1;
      for (std::size_t k = 0; k < clusters.size(); ++k) {
        auto& w = clusters[k];
        if (!w.has_nominal) continue;
        if (c.gender != Gender::unknown && w.gender != Gender::unknown && c.gender != w.gender) continue;
        bool match = std::any_of(w.nominal_forms.begin(), w.nominal_forms.end(),
                                 [&](const Sentence& f) { return corefer(f, c.normalized); });
        if (!match) continue;
        if (best < 0 || clusters[static_cast<std::size_t>(best)].last() < w.last()) best = static_cast<int>(k);
      }
      if (best < 0) {
        clusters.emplace_back();
        best = static_cast<int>(clusters.size() - 1);
      }
      auto& w = clusters[static_cast<std::size_t>(best)];
      w.mentions.push_back(m);
      w.nominal_forms.push_back(c.normalized);
      w.has_nominal = true;
      w.all_things = w.all_things && c.thing;
      w.note_gender(c.gender);
    } else {
      int best = -1;
      for (std::size_t k = 0; k < clusters.size(); ++k) {
        auto& w = clusters[k];
        if (!w.accepts(c.pronoun)) continue;
        if (m.sentence_index - w.mentions.back().sentence_index > 3) continue;
        if (best < 0) {
          best = static_cast<int>(k);
          continue;
        }
        // A cluster whose known gender agrees outranks a nearer unknown one.
        const auto& b = clusters[static_cast<std::size_t>(best)];
        bool wg = w.gender != Gender::unknown, bg = b.gender != Gender::unknown;
        if (wg != bg ? wg : b.last() < w.last()) best = static_cast<int>(k);
      }
      if (best < 0) {
        Working w;
        w.mentions.push_back(m);
        w.all_things = false;
        clusters.push_back(std::move(w));
        continue;
      }
      auto& w = clusters[static_cast<std::size_t>(best)];
      w.mentions.push_back(m);
      if (c.pronoun == PronounClass::masculine) w.note_gender(Gender::male);
      if (c.pronoun == PronounClass::feminine) w.note_gender(Gender::female);
    }
  }

  std::vector<MentionCluster> out;
  for (std::size_t k = 0; k < clusters.size(); ++k) {
    MentionCluster mc;
    mc.mentions = clusters[k].mentions;
    mc.head = clusters[k].has_nominal ? clusters[k].nominal_forms.front().back() : mc.mentions.front().surface.back();
    out.push_back(std::move(mc));
  }
  std::stable_sort(out.begin(), out.end(), [](const MentionCluster& a, const MentionCluster& b) {
    const auto& x = a.mentions.front();
    const auto& y = b.mentions.front();
    return Position{x.sentence_index, x.start} < Position{y.sentence_index, y.start};
  });
  for (std::size_t k = 0; k < out.size(); ++k) out[k].cluster_id = static_cast<int>(k);
  return out;
}

std::vector<MentionCluster> select_salient_clusters(const std::vector<MentionCluster>& clusters, std::size_t k) {
  auto first = [](const MentionCluster& c) {
    return Position{c.mentions.front().sentence_index, c.mentions.front().start};
  };
  std::vector<std::size_t> order(clusters.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (clusters[a].mentions.size() != clusters[b].mentions.size()) {
      return clusters[a].mentions.size() > clusters[b].mentions.size();
    }
    return first(clusters[a]) < first(clusters[b]);
  });
  std::vector<bool> keep(clusters.size(), false);
  for (std::size_t i = 0; i < order.size() && i < k; ++i) keep[order[i]] = true;
  for (std::size_t i = 0; i < clusters.size(); ++i)
    if (clusters[i].first_sentence() <= 2) keep[i] = true;

  std::vector<MentionCluster> out;
  for (std::size_t i = 0; i < clusters.size(); ++i)
    if (keep[i]) out.push_back(clusters[i]);
  std::stable_sort(out.begin(), out.end(),
                   [&](const MentionCluster& a, const MentionCluster& b) { return first(a) < first(b); });
  return out;
}

Sentence cluster_to_token_sequence(const MentionCluster& cluster) {
  if (cluster.mentions.empty()) throw std::invalid_argument("cluster_to_token_sequence: empty cluster");
  Sentence out;
  for (std::size_t i = 0; i < cluster.mentions.size(); ++i) {
    if (i) out.push_back(kMent);
    const auto& s = cluster.mentions[i].surface;
    out.insert(out.end(), s.begin(), s.end());
  }
  return out;
}

std::vector<std::set<int>> clusters_per_sentence(const std::vector<MentionCluster>& clusters,
                                                 std::size_t sentence_count) {
  std::vector<std::set<int>> out(sentence_count);
  for (const auto& c : clusters)
    for (const auto& m : c.mentions)
      if (m.sentence_index < sentence_count) out[m.sentence_index].insert(c.cluster_id);
  return out;
}

}  // namespace seneca::text
