#include "seneca/text.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace seneca::text {

namespace {

bool is_letter(unsigned char c) { return std::isalpha(c) || c >= 0x80; }
bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }
bool is_space(unsigned char c) { return std::isspace(c) != 0; }

char lower(unsigned char c) { return static_cast<char>(c < 0x80 ? std::tolower(c) : c); }

}  // namespace

std::vector<RawToken> tokenize_raw(std::string_view text) {
  std::vector<RawToken> out;
  const std::size_t n = text.size();
  auto at = [&](std::size_t i) -> unsigned char { return i < n ? static_cast<unsigned char>(text[i]) : 0; };
  std::size_t i = 0;
  while (i < n) {
    unsigned char c = at(i);
    if (is_space(c)) {
      ++i;
    } else if (is_digit(c)) {
      while (i < n && is_digit(at(i))) ++i;
      out.push_back({"0", false});
    } else if (is_letter(c)) {
      RawToken tok{"", std::isupper(c) != 0};
      while (i < n) {
        unsigned char d = at(i);
        if (is_letter(d)) {
          tok.text.push_back(lower(d));
          ++i;
        } else if (d == '-' && is_letter(at(i + 1))) {
          tok.text.push_back('-');
          ++i;
        } else {
          break;
        }
      }
      out.push_back(std::move(tok));
    } else if (c == '\'' && is_letter(at(i + 1))) {
      RawToken tok{"'", false};
      ++i;
      while (i < n && is_letter(at(i))) tok.text.push_back(lower(at(i++)));
      out.push_back(std::move(tok));
    } else {
      out.push_back({std::string(1, static_cast<char>(c)), false});
      ++i;
    }
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  for (auto& t : tokenize_raw(text)) out.push_back(std::move(t.text));
  return out;
}

std::string join(const Sentence& tokens, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += sep;
    out += tokens[i];
  }
  return out;
}

Sentence flatten(const std::vector<Sentence>& sentences) {
  Sentence out;
  for (const auto& s : sentences) out.insert(out.end(), s.begin(), s.end());
  return out;
}

Article Article::from_raw(std::string id, const std::vector<std::string>& article,
                          const std::vector<std::string>& summary) {
  Article a;
  a.id = std::move(id);
  for (const auto& s : article) {
    auto raw = tokenize_raw(s);
    if (raw.empty()) continue;
    Sentence toks;
    std::vector<bool> caps;
    for (auto& t : raw) {
      caps.push_back(t.capitalized);
      toks.push_back(std::move(t.text));
    }
    a.sentences.push_back(std::move(toks));
    a.capitalized.push_back(std::move(caps));
  }
  for (const auto& s : summary) {
    auto toks = tokenize(s);
    if (!toks.empty()) a.summary.push_back(std::move(toks));
  }
  return a;
}

std::vector<Article> read_corpus(std::istream& in) {
  std::vector<Article> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      auto article = j.at("article").get<std::vector<std::string>>();
      std::vector<std::string> summary;
      if (j.contains("summary")) summary = j.at("summary").get<std::vector<std::string>>();
      out.push_back(Article::from_raw(j.at("id").get<std::string>(), article, summary));
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("corpus line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::vector<Article> read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus " + path.string());
  return read_corpus(in);
}

void write_corpus(std::ostream& out, const std::vector<RawArticle>& corpus) {
  for (const auto& a : corpus) {
    nlohmann::json j;
    j["id"] = a.id;
    j["article"] = a.article;
    j["summary"] = a.summary;
    out << j.dump() << '\n';
  }
}

Vocabulary::Vocabulary() {
  for (const char* t : {kPad, kUnk, kStart, kStop, kMent}) push(t);
}

void Vocabulary::push(const std::string& token) {
  index_.emplace(token, static_cast<int>(tokens_.size()));
  tokens_.push_back(token);
}

Vocabulary Vocabulary::build(const std::vector<Article>& corpus, std::size_t cap) {
  if (corpus.empty()) throw std::invalid_argument("vocabulary: empty corpus");
  std::map<std::string, std::size_t> counts;
  for (const auto& a : corpus) {
    for (const auto& s : a.sentences)
      for (const auto& t : s) ++counts[t];
    for (const auto& s : a.summary)
      for (const auto& t : s) ++counts[t];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) { return x.second > y.second; });
  Vocabulary v;
  for (const auto& [tok, n] : ranked) {
    if (v.size() - kReserved >= cap) break;
    if (!v.contains(tok)) v.push(tok);
  }
  return v;
}

int Vocabulary::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnkId : it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw std::out_of_range("vocabulary: id " + std::to_string(id) + " out of range");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocabulary::encode(const Sentence& tokens) const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id(t));
  return out;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write vocabulary " + path.string());
  for (const auto& t : tokens_) out << t << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read vocabulary " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  Vocabulary v;
  if (lines.size() < kReserved) throw std::runtime_error("vocabulary file is missing reserved tokens");
  for (std::size_t i = 0; i < kReserved; ++i) {
    if (lines[i] != v.tokens_[i]) throw std::runtime_error("vocabulary file has unexpected reserved token " + lines[i]);
  }
  for (std::size_t i = kReserved; i < lines.size(); ++i) {
    if (v.contains(lines[i])) throw std::runtime_error("vocabulary file repeats token " + lines[i]);
    v.push(lines[i]);
  }
  return v;
}

}  // namespace seneca::text
