#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace seneca::text {

using Sentence = std::vector<std::string>;

struct RawToken {
  std::string text;   // lowercased, digit runs masked to "0"
  bool capitalized;   // first character was an uppercase letter in the raw text
};

// Lowercases, splits punctuation into separate tokens, keeps clitics such as
// "'s" as their own token and replaces every maximal digit run by "0".
std::vector<std::string> tokenize(std::string_view text);
std::vector<RawToken> tokenize_raw(std::string_view text);

std::string join(const Sentence& tokens, std::string_view sep = " ");
Sentence flatten(const std::vector<Sentence>& sentences);

struct Article {
  std::string id;
  std::vector<Sentence> sentences;
  // Per-token capitalization in the raw text; empty when unknown.
  std::vector<std::vector<bool>> capitalized;
  std::vector<Sentence> summary;

  // Tokenizes raw sentence strings. Sentences that tokenize to nothing are dropped.
  static Article from_raw(std::string id, const std::vector<std::string>& article,
                          const std::vector<std::string>& summary = {});
  bool cased(std::size_t s, std::size_t t) const {
    return s < capitalized.size() && t < capitalized[s].size() && capitalized[s][t];
  }
};

// Reads the corpus JSON-lines format {"id", "article": [..], "summary": [..]}.
std::vector<Article> read_corpus(std::istream& in);
std::vector<Article> read_corpus(const std::filesystem::path& path);

struct RawArticle {
  std::string id;
  std::vector<std::string> article;
  std::vector<std::string> summary;
};
void write_corpus(std::ostream& out, const std::vector<RawArticle>& corpus);

inline constexpr const char* kPad = "<pad>";
inline constexpr const char* kUnk = "<unk>";
inline constexpr const char* kStart = "<s>";
inline constexpr const char* kStop = "</s>";
inline constexpr const char* kMent = "<ment>";

class Vocabulary {
 public:
  static constexpr int kPadId = 0;
  static constexpr int kUnkId = 1;
  static constexpr int kStartId = 2;
  static constexpr int kStopId = 3;
  static constexpr int kMentId = 4;
  static constexpr std::size_t kReserved = 5;

  Vocabulary();

  // Keeps the `cap` most frequent tokens of article and summary text, ties
  // broken lexicographically. Reserved tokens are always present and do not
  // count against the cap.
  static Vocabulary build(const std::vector<Article>& corpus, std::size_t cap = 50000);

  int id(const std::string& token) const;
  const std::string& token(int id) const;
  bool contains(const std::string& token) const { return index_.count(token) > 0; }
  std::size_t size() const { return tokens_.size(); }
  std::vector<int> encode(const Sentence& tokens) const;

  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  void push(const std::string& token);
  std::vector<std::string> tokens_;
  std::map<std::string, int> index_;
};

}  // namespace seneca::text
