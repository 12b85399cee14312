#include "doctest.h"
#include "oracles.hpp"
#include "seneca/rewards.hpp"
#include "seneca/rng.hpp"

using namespace seneca;
using namespace seneca::metrics;
using text::Sentence;

namespace {

Sentence random_tokens(Rng& rng, std::size_t max_len, std::size_t alphabet) {
  Sentence s;
  std::size_t n = rng.index(max_len + 1);
  for (std::size_t i = 0; i < n; ++i) s.push_back(std::string(1, static_cast<char>('a' + rng.index(alphabet))));
  return s;
}

}  // namespace

TEST_CASE("rouge_n examples") {
  auto same = rouge_n(1, Sentence{"a", "b"}, Sentence{"a", "b"});
  CHECK(same.f1 == 1.0);
  auto s = rouge_n(2, Sentence{"the", "cat", "sat", "on"}, Sentence{"the", "cat", "ate"});
  CHECK(s.precision == doctest::Approx(1.0 / 3).epsilon(1e-15));
  CHECK(s.recall == 0.5);
  CHECK(s.f1 == doctest::Approx(0.4).epsilon(1e-15));
  auto short_cand = rouge_n(3, Sentence{"a", "b"}, Sentence{"a", "b", "c"});
  CHECK(short_cand.precision == 0.0);
  CHECK(short_cand.recall == 0.0);
  CHECK(short_cand.f1 == 0.0);
  CHECK_THROWS_AS(rouge_n(0, Sentence{"a"}, Sentence{"a"}), std::invalid_argument);
}

TEST_CASE("rouge_n matches the golden file") {
  auto golden = testing::load_rouge_golden(SENECA_TEST_DATA "/rouge_n_golden.jsonl");
  REQUIRE(golden.size() == 20);
  for (const auto& g : golden) {
    auto s = rouge_n(g.n, g.candidate, g.reference);
    double p = g.candidate_ngrams ? double(g.overlap) / double(g.candidate_ngrams) : 0.0;
    double r = g.reference_ngrams ? double(g.overlap) / double(g.reference_ngrams) : 0.0;
    CHECK(s.precision == p);
    CHECK(s.recall == r);
  }
}

TEST_CASE("rouge_l examples") {
  auto s = rouge_l(Sentence{"a", "b", "c", "d"}, Sentence{"a", "c", "b", "d"});
  CHECK(s.precision == 0.75);
  CHECK(s.recall == 0.75);
  CHECK(s.f1 == doctest::Approx(0.75).epsilon(1e-15));
  auto empty = rouge_l(Sentence{}, Sentence{"a"});
  CHECK(empty.f1 == 0.0);
  CHECK(rouge_l(Sentence{"a"}, Sentence{}).recall == 0.0);
  auto prefix = rouge_l(Sentence{"a", "b"}, Sentence{"a", "b", "c", "d"});
  CHECK(prefix.precision == 1.0);
  CHECK(prefix.recall == 0.5);
}

TEST_CASE("rouge_reward examples") {
  CHECK(rouge_reward(Sentence{"x", "y", "z"}, Sentence{"x", "y", "z"}) == doctest::Approx(1.0).epsilon(1e-15));
  double r = rouge_reward(Sentence{"the", "cat", "sat", "on"}, Sentence{"the", "cat", "ate"});
  CHECK(r == doctest::Approx((0.4 + 4.0 / 7.0) / 2.0).epsilon(1e-14));
  CHECK(r == doctest::Approx(0.4857).epsilon(1e-4));
  CHECK(rouge_reward(Sentence{"a", "b"}, Sentence{"c", "d"}) == 0.0);
  std::vector<Sentence> multi = {{"the", "cat"}, {"sat", "on"}};
  CHECK(rouge_reward(multi, std::vector<Sentence>{{"the", "cat", "ate"}}) == r);
}

TEST_CASE("rouge properties on random pairs") {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    auto a = random_tokens(rng, 8, 4);
    auto b = random_tokens(rng, 8, 4);
    CHECK(lcs_length(a, b) == testing::brute_force_lcs(a, b));
    auto l = rouge_l(a, b);
    auto lr = rouge_l(b, a);
    CHECK(l.f1 == doctest::Approx(lr.f1).epsilon(1e-15));
    CHECK(l.precision == lr.recall);
    for (int n = 1; n <= 3; ++n) {
      auto s = rouge_n(n, a, b);
      auto t = rouge_n(n, b, a);
      CHECK(s.f1 == doctest::Approx(t.f1).epsilon(1e-15));
      for (double v : {s.precision, s.recall, s.f1}) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
    }
    if (!b.empty()) {
      auto grown = a;
      grown.push_back(b[rng.index(b.size())]);
      CHECK(rouge_n(1, grown, b).recall >= rouge_n(1, a, b).recall);
      CHECK(rouge_l(grown, b).recall >= l.recall);
    }
    if (!a.empty()) CHECK(rouge_l(a, a).f1 == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("greedy selection examples") {
  std::vector<Sentence> article = {{"rain", "fell", "today"}, {"markets", "rose", "sharply"},
                                   {"the", "mayor", "resigned", "on", "friday"}, {"crowds", "gathered"}};
  std::vector<Sentence> ref = {{"the", "mayor", "resigned", "on", "friday"}};
  CHECK(oracle::greedy_rouge2_selection(article, ref) == std::vector<int>{2});
  CHECK(testing::exhaustive_best_rouge2(article, ref) == 1.0);

  std::vector<Sentence> unrelated = {{"nothing", "shared", "here"}};
  CHECK(oracle::greedy_rouge2_selection(article, unrelated).empty());
}

TEST_CASE("augment_by_rougeL_recall examples") {
  std::vector<Sentence> article = {{"a", "b", "c"}, {"a", "x", "y", "b"}, {"q"}};
  std::vector<Sentence> ref = {{"a", "b", "c"}, {"a", "b", "p", "r", "s"}};
  auto set = oracle::augment_by_rougeL_recall(article, ref);
  CHECK(set.count(0) == 1);
  // Sentence 1 shares "a b" with both references: 2/3 on the first, 2/5 on the second.
  CHECK(set.count(1) == 1);
  CHECK(set.count(2) == 0);

  std::vector<Sentence> five = {{"a", "b", "p", "r", "s"}};
  CHECK(oracle::augment_by_rougeL_recall({{"a", "b", "z"}}, five).empty());
  CHECK(oracle::augment_by_rougeL_recall(article, {}).empty());

  std::vector<Sentence> half = {{"a", "b", "c", "d"}};
  CHECK(oracle::augment_by_rougeL_recall({{"a", "b"}}, half).empty());
}

TEST_CASE("build_labels examples") {
  text::Article a;
  a.id = "x";
  a.sentences = {{"w", "w"}, {"q", "r"}, {"n", "o"}, {"the", "mayor", "quit", "today"}, {"z"},
                 {"voters", "were", "angry"}};
  std::vector<Sentence> ref = {{"the", "mayor", "quit", "today"}, {"voters", "were", "angry", "and", "upset"}};
  auto greedy = oracle::greedy_rouge2_selection(a.sentences, ref);
  REQUIRE(greedy.size() >= 1);
  CHECK(greedy.front() == 3);
  auto aug = oracle::augment_by_rougeL_recall(a.sentences, ref);
  CHECK(aug == std::set<int>{3, 5});
  CHECK(oracle::build_labels(a, ref).indices == std::vector<int>{3, 5});

  text::Article four;
  four.sentences = {{"a"}, {"b"}, {"c"}, {"d"}};
  CHECK(oracle::build_labels(four, {{"zzz"}}).indices == std::vector<int>{0, 1});
  text::Article one;
  one.sentences = {{"a"}};
  CHECK(oracle::build_labels(one, {{"zzz"}}).indices == std::vector<int>{0});
  CHECK_THROWS_AS(oracle::build_labels(text::Article{}, {{"a"}}), std::invalid_argument);
}

TEST_CASE("label ordering: greedy order first, then augmented ascending") {
  text::Article a;
  a.sentences = {{"p", "q"}, {"x", "y", "z"}, {"a", "b", "c", "d"}, {"k", "l", "m"}};
  std::vector<Sentence> ref = {{"a", "b", "c", "d", "x", "y"}, {"k", "l", "m"}};
  auto label = oracle::build_labels(a, ref);
  auto greedy = oracle::greedy_rouge2_selection(a.sentences, ref);
  REQUIRE(label.indices.size() >= greedy.size());
  CHECK(std::equal(greedy.begin(), greedy.end(), label.indices.begin()));
  std::set<int> seen(label.indices.begin(), label.indices.end());
  CHECK(seen.size() == label.indices.size());
  for (std::size_t i = greedy.size(); i + 1 < label.indices.size(); ++i) CHECK(label.indices[i] < label.indices[i + 1]);
}

TEST_CASE("rule rewards reproduce the golden suite") {
  auto golden = testing::load_rule_golden(SENECA_TEST_DATA "/rule_golden.tsv");
  std::map<std::string, int> per_rule;
  for (const auto& g : golden) {
    ++per_rule[g.rule];
    INFO(g.rule << ": " << g.raw);
    if (g.rule == "ref") CHECK(rewards::referential_clarity_reward(g.summary) == g.expected);
    else if (g.rule == "app") CHECK(rewards::apposition_reward(g.summary) == g.expected);
    else CHECK(int(rewards::has_relative_clause(g.summary)) == g.expected);
  }
  CHECK(per_rule["ref"] == 30);
  CHECK(per_rule["app"] == 30);
  CHECK(per_rule["relcl"] == 30);
}

TEST_CASE("referential clarity is cleared by a leading noun phrase") {
  Rng rng(5);
  const std::vector<std::string> words = {"he", "she", "it", "his", "the", "plan", "said", ",", "they", "won", "a"};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Sentence> summary(1 + rng.index(3));
    for (auto& s : summary) {
      for (std::size_t t = 0; t < 1 + rng.index(6); ++t) s.push_back(words[rng.index(words.size())]);
    }
    double r = rewards::referential_clarity_reward(summary);
    CHECK((r == 0.0 || r == -1.0));
    double app = rewards::apposition_reward(summary);
    CHECK((app == 0.0 || app == -1.0));
    summary.insert(summary.begin(), Sentence{"the", "minister", "spoke", "."});
    CHECK(rewards::referential_clarity_reward(summary) == 0.0);
  }
}

TEST_CASE("mix_reward examples and linearity") {
  rewards::RewardConfig cfg;
  CHECK(cfg.gamma_coh == 0.01);
  CHECK(cfg.gamma_ref == 0.005);
  CHECK(cfg.gamma_app == 0.005);

  rewards::RewardConfig coh_only;
  coh_only.use_coh = true;
  CHECK(rewards::mix_reward({0.5, 0.8, 0, 0, 0}, coh_only).total == doctest::Approx(0.508).epsilon(1e-15));

  auto off = rewards::mix_reward({0.3, 0.9, -1, -1, 0}, cfg);
  CHECK(off.total == 0.3);

  rewards::RewardConfig ref_only;
  ref_only.use_ref = true;
  CHECK(rewards::mix_reward({0.3, 0, -1, 0, 0}, ref_only).total == doctest::Approx(0.295).epsilon(1e-15));

  rewards::RewardConfig all{0.01, 0.005, 0.005, true, true, true};
  auto b = rewards::mix_reward({0.4, 0.6, -1, -1, 0}, all);
  CHECK(b.total == doctest::Approx(0.4 + 0.006 - 0.005 - 0.005).epsilon(1e-15));
  auto b2 = rewards::mix_reward({0.4, 1.2, -1, -1, 0}, all);
  CHECK(b2.total - b.total == doctest::Approx(0.006).epsilon(1e-12));

  rewards::RewardConfig zero{0.0, 0.0, 0.0, true, true, true};
  CHECK(rewards::mix_reward({0.7, 0.3, -1, -1, 0}, zero).total == 0.7);
}

TEST_CASE("corpus_quality_stats") {
  std::vector<std::vector<Sentence>> sums = {{text::tokenize("he said the plan works .")},
                                            {text::tokenize("the senator , who lost , spoke")}};
  auto st = rewards::corpus_quality_stats(sums, sums);
  CHECK(st.count == 2);
  CHECK(st.ref_pct == 50.0);
  CHECK(st.relcl_pct == 50.0);
  CHECK(st.app_pct == 0.0);
  CHECK_THROWS_AS(rewards::corpus_quality_stats({}, {}), std::invalid_argument);
  CHECK_THROWS_AS(rewards::corpus_quality_stats(sums, {sums[0]}), std::invalid_argument);
  std::ostringstream csv;
  rewards::write_quality_csv(csv, st);
  CHECK(csv.str() == "summaries,ref_pct,relcl_pct,app_pct\n2,50,50,0\n");
}
