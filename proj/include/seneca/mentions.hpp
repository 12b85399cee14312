#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "seneca/text.hpp"

namespace seneca::text {

enum class Gender { unknown, male, female };
enum class PronounClass { masculine, feminine, neuter, plural };

// Plain-text resources, one entry per line, optional class tag after a space.
// Lines starting with '#' are comments.
struct Lexicons {
  std::set<std::string> determiners;
  std::map<std::string, PronounClass> pronouns;
  std::map<std::string, Gender> honorifics;
  std::map<std::string, Gender> first_names;
  std::map<std::string, bool> nouns;  // token -> denotes a person
  std::set<std::string> function_words;

  static Lexicons load(const std::filesystem::path& dir);
  // Directory from $SENECA_RESOURCES, else the bundled resources/ directory.
  static const Lexicons& bundled();
  static std::filesystem::path default_dir();

  bool is_determiner(const std::string& t) const { return determiners.count(t) > 0; }
  bool is_pronoun(const std::string& t) const { return pronouns.count(t) > 0; }
  bool is_honorific(const std::string& t) const { return honorifics.count(t) > 0; }
  bool is_first_name(const std::string& t) const { return first_names.count(t) > 0; }
  bool is_noun(const std::string& t) const { return nouns.count(t) > 0; }
  bool is_function_word(const std::string& t) const { return function_words.count(t) > 0; }
};

enum class MentionKind { nominal, pronominal };

struct Mention {
  std::size_t sentence_index = 0;
  std::size_t start = 0;  // token span [start, end)
  std::size_t end = 0;
  Sentence surface;
  MentionKind kind = MentionKind::nominal;

  bool operator==(const Mention&) const = default;
};

struct MentionCluster {
  int cluster_id = 0;
  std::vector<Mention> mentions;  // ordered by (sentence_index, start)
  std::string head;

  std::size_t first_sentence() const { return mentions.front().sentence_index; }
  bool operator==(const MentionCluster&) const = default;
};

// Rule-based coreference: nominal mentions are capitalized or lexicon name
// spans, determiner+noun spans and bare lexicon nouns; nominals corefer on
// equal heads or surface suffix match; pronouns attach to the nearest
// compatible nominal cluster within three sentences, else stay singletons.
std::vector<MentionCluster> extract_mention_clusters(const Article& article, const Lexicons& lex = Lexicons::bundled());

// Union of clusters mentioned in sentences 0-2 and the k largest clusters
// (ties to the earlier first mention), ordered by first mention.
std::vector<MentionCluster> select_salient_clusters(const std::vector<MentionCluster>& clusters, std::size_t k = 6);

// Mention tokens in document order separated by <ment>.
Sentence cluster_to_token_sequence(const MentionCluster& cluster);

// Cluster ids present in each sentence.
std::vector<std::set<int>> clusters_per_sentence(const std::vector<MentionCluster>& clusters,
                                                 std::size_t sentence_count);

}  // namespace seneca::text
