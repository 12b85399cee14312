#include <fstream>
#include <iterator>
#include <sstream>

#include "doctest.h"
#include "seneca/pipeline.hpp"
#include "seneca/toy_corpus.hpp"

using namespace seneca;
using namespace seneca::pipeline;
namespace fs = std::filesystem;
using text::Sentence;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("seneca_pipeline_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

PipelineConfig tiny_run(const fs::path& dir) {
  std::istringstream text(
      "seed = 3\n"
      "toy.size = 16\n"
      "coh.embedding_dim = 8\ncoh.filters_per_width = 4\ncoh.hidden = 8\ncoh.epochs = 1\n"
      "sel.embedding_dim = 8\nsel.widths = 1,2\nsel.filters_per_width = 4\n"
      "sel.encoder_hidden = 8\nsel.decoder_hidden = 8\nsel.attention_dim = 8\nsel.epochs = 1\n"
      "gen.embedding_dim = 8\ngen.encoder_hidden = 8\ngen.decoder_hidden = 8\ngen.attention_dim = 8\n"
      "gen.epochs = 1\n"
      "rl.steps = 2\nrl.batch_size = 2\nrl.samples = 2\nrl.max_len = 12\n"
      "connect.steps = 2\nconnect.batch_size = 4\nconnect.max_len = 12\n"
      "decode.max_len = 12\n");
  auto cfg = PipelineConfig::parse(text);
  cfg.corpus = (dir / "toy.jsonl").string();
  cfg.out_dir = (dir / "run").string();
  return cfg;
}

struct TinyModels {
  std::vector<text::Article> corpus;
  text::Vocabulary vocab;
  selector::Selector sel;
  generator::Generator gen;
};

TinyModels tiny_models(std::uint64_t seed, std::vector<text::Article> corpus) {
  auto vocab = text::Vocabulary::build(corpus);
  selector::SelectorConfig sc;
  sc.embedding_dim = 8;
  sc.widths = {1, 2};
  sc.filters_per_width = 4;
  sc.encoder_hidden = sc.decoder_hidden = sc.attention_dim = 8;
  generator::GeneratorConfig gc{8, 8, 8, 8};
  Rng rng(seed);
  selector::Selector sel(vocab, sc, rng);
  generator::Generator gen(vocab, gc, rng);
  return {std::move(corpus), vocab, std::move(sel), std::move(gen)};
}

}  // namespace

TEST_CASE("config defaults follow the published hyperparameters") {
  PipelineConfig cfg;
  CHECK(cfg.vocab_cap == 50000);
  CHECK(cfg.sel_model.embedding_dim == 128);
  CHECK(cfg.sel_model.widths.size() * cfg.sel_model.filters_per_width == 100);
  CHECK(cfg.sel_model.encoder_hidden == 256);
  CHECK(cfg.gen_model.encoder_hidden == 256);
  CHECK(cfg.sel_train.lr == 0.001);
  CHECK(cfg.gen_ml.lr == 0.001);
  CHECK(cfg.gen_ml.clip_norm == 2.0);
  CHECK(cfg.gen_ml.batch_size == 32);
  CHECK(cfg.gen_rl.lr == 0.0001);
  CHECK(cfg.rl_batch == 10);
  CHECK(cfg.gen_rl.samples_per_item == 5);
  CHECK(cfg.connect.batch_size == 50);
  CHECK(cfg.reward.gamma_coh == 0.01);
  CHECK(cfg.reward.gamma_ref == 0.005);
  CHECK(cfg.reward.gamma_app == 0.005);
  CHECK(cfg.sel_model.salient_k == 6);
  CHECK(cfg.decode.alpha == 1.0);
}

TEST_CASE("config parsing, round trip and errors") {
  std::istringstream in("# comment\nseed = 9\nrl.lr=0.5  # trailing\nsel.widths = 1,3\nreward.use_ref = true\n\n");
  auto cfg = PipelineConfig::parse(in);
  CHECK(cfg.seed == 9);
  CHECK(cfg.gen_rl.lr == 0.5);
  CHECK(cfg.sel_model.widths == std::vector<std::size_t>{1, 3});
  CHECK(cfg.reward.use_ref);

  std::istringstream again(cfg.serialize());
  CHECK(PipelineConfig::parse(again).serialize() == cfg.serialize());

  std::istringstream unknown("nope = 1\n");
  CHECK_THROWS_AS(PipelineConfig::parse(unknown), std::invalid_argument);
  std::istringstream malformed("seed = twelve\n");
  CHECK_THROWS_AS(PipelineConfig::parse(malformed), std::invalid_argument);
  std::istringstream no_eq("seed 12\n");
  CHECK_THROWS_AS(PipelineConfig::parse(no_eq), std::invalid_argument);
  std::istringstream negative("reward.gamma_ref = -0.1\n");
  CHECK_THROWS_AS(PipelineConfig::parse(negative), std::invalid_argument);
  std::istringstream kind("toy.kind = other\n");
  CHECK_THROWS_AS(PipelineConfig::parse(kind), std::invalid_argument);
}

TEST_CASE("evaluate_corpus aggregation and errors") {
  std::vector<std::vector<Sentence>> refs = {{{"a", "b", "c", "."}, {"d", "e", "."}}, {{"x", "y", "."}}};
  std::vector<Sentence> same = {text::flatten(refs[0]), text::flatten(refs[1])};
  auto perfect = evaluate_corpus({"1", "2"}, same, refs);
  CHECK(perfect.mean.rouge1 == 1.0);
  CHECK(perfect.mean.rouge2 == 1.0);
  CHECK(perfect.mean.rougeL == 1.0);

  std::vector<Sentence> sys = {{"a", "c", "d", "."}, {"y", "x", "z"}};
  auto report = evaluate_corpus({"1", "2"}, sys, refs);
  double r1 = 0, r2 = 0, rl = 0;
  for (const auto& r : report.rows) {
    r1 += r.rouge1;
    r2 += r.rouge2;
    rl += r.rougeL;
  }
  CHECK(std::abs(r1 / 2 - report.mean.rouge1) < 1e-9);
  CHECK(std::abs(r2 / 2 - report.mean.rouge2) < 1e-9);
  CHECK(std::abs(rl / 2 - report.mean.rougeL) < 1e-9);

  std::ostringstream csv;
  write_eval_csv(csv, report);
  CHECK(csv.str().rfind("id,rouge1,rouge2,rougeL,coherence\n", 0) == 0);
  CHECK(eval_json(report)["articles"] == 2);

  CHECK_THROWS_AS(evaluate_corpus({}, {}, {}), std::invalid_argument);
  CHECK_THROWS_AS(evaluate_corpus({"1"}, {sys[0]}, refs), std::invalid_argument);
}

TEST_CASE("connect_rl keeps the generator frozen and needs a trained one") {
  auto m = tiny_models(1, toy::tokenize_corpus(toy::make_planted_corpus(2, 6)));
  ConnectOptions opt;
  opt.steps = 2;
  opt.batch_size = 3;
  opt.max_len = 10;
  CHECK_THROWS_AS(connect_rl(m.sel, m.gen, m.corpus, opt), std::invalid_argument);

  m.gen.count_update();
  auto gen_before = m.gen.params().checksum();
  auto sel_before = m.sel.params().checksum();
  auto report = connect_rl(m.sel, m.gen, m.corpus, opt);
  CHECK(m.gen.params().checksum() == gen_before);
  CHECK(report.mean_advantage.size() == 2);
  if (report.updates > 0) CHECK(m.sel.params().checksum() != sel_before);
  CHECK_THROWS_AS(connect_rl(m.sel, m.gen, {}, opt), std::invalid_argument);
}

TEST_CASE("connect_rl: zero advantage leaves the selector unchanged") {
  // One-sentence articles: every extraction decodes from sentence 0.
  std::vector<text::Article> corpus;
  for (int i = 0; i < 4; ++i) {
    corpus.push_back(text::Article::from_raw("s" + std::to_string(i), {"Mary Kelly praised the plan."},
                                             {"Kelly praised the plan."}));
  }
  auto m = tiny_models(4, corpus);
  m.gen.count_update();
  auto before = m.sel.params().checksum();
  ConnectOptions opt;
  opt.steps = 3;
  opt.batch_size = 4;
  opt.max_len = 8;
  auto report = connect_rl(m.sel, m.gen, m.corpus, opt);
  CHECK(report.updates == 0);
  for (double a : report.mean_advantage) CHECK(a == 0.0);
  CHECK(m.sel.params().checksum() == before);
}

TEST_CASE("summarize_end_to_end: degenerate input, determinism, coherence wiring") {
  auto corpus = toy::tokenize_corpus(toy::make_toy_corpus(5, 4));
  auto m = tiny_models(2, corpus);
  auto one = text::Article::from_raw("one", {"Mary Kelly praised the plan."});
  generator::DecodeOptions dec;
  dec.max_len = 10;
  auto s = summarize_end_to_end(one, m.sel, m.gen, dec);
  CHECK(s.extraction == std::vector<int>{0});
  CHECK(s.tokens.size() <= 10);

  coherence::ModelConfig cc;
  cc.embedding_dim = 8;
  cc.filters_per_width = 4;
  cc.hidden = 8;
  Rng rng(3);
  coherence::CoherenceModel coh(m.vocab, cc, rng);
  auto a = summarize_end_to_end(corpus[0], m.sel, m.gen, dec, 6, &coh);
  auto b = summarize_end_to_end(corpus[0], m.sel, m.gen, dec, 6, &coh);
  CHECK(a.tokens == b.tokens);
  CHECK(a.extraction == b.extraction);
  REQUIRE(a.coherence.has_value());
  CHECK(*a.coherence == coherence::summary_coherence(coh, coherence::split_sentences(a.tokens)));
}

TEST_CASE("toy corpus determinism and construction guarantees") {
  std::ostringstream a, b, c;
  text::write_corpus(a, toy::make_toy_corpus(3, 20));
  text::write_corpus(b, toy::make_toy_corpus(3, 20));
  text::write_corpus(c, toy::make_toy_corpus(4, 20));
  CHECK(a.str() == b.str());
  CHECK(a.str() != c.str());

  auto corpus = toy::tokenize_corpus(toy::make_toy_corpus(7, 50));
  double summary_sentences = 0;
  for (const auto& art : corpus) {
    Rng rng(1);
    auto triples = coherence::build_coherence_triples(art, text::extract_mention_clusters(art), rng);
    CHECK(!triples.empty());
    summary_sentences += static_cast<double>(art.summary.size());
  }
  CHECK(summary_sentences / static_cast<double>(corpus.size()) >= 2.0);
}

TEST_CASE("run_stage: unknown stage and missing prerequisites") {
  auto dir = scratch("prereq");
  auto cfg = tiny_run(dir);
  CHECK_THROWS_AS(run_stage("train-everything", cfg), std::invalid_argument);
  CHECK_THROWS_AS(run_stage("ingest", cfg), PrerequisiteError);
  run_stage("make-toy-corpus", cfg);
  run_stage("ingest", cfg);
  CHECK_THROWS_AS(run_stage("train-selector", cfg), PrerequisiteError);
  run_stage("make-labels", cfg);
  run_stage("train-selector", cfg);
  try {
    run_stage("connect", cfg);
    FAIL("connect ran without a generator");
  } catch (const PrerequisiteError& e) {
    CHECK(std::string(e.what()).find("train-generator-rl") != std::string::npos);
  }
  cfg.connect_generator = "ml";
  try {
    run_stage("connect", cfg);
    FAIL("connect ran without a generator");
  } catch (const PrerequisiteError& e) {
    CHECK(std::string(e.what()).find("train-generator-ml") != std::string::npos);
  }
  CHECK_THROWS_AS(run_stage("evaluate", cfg), PrerequisiteError);
  fs::remove_all(dir);
}

TEST_CASE("full pipeline reruns are byte-identical") {
  const std::vector<std::string> stages = {"make-toy-corpus", "ingest",  "make-labels",       "train-coherence",
                                           "eval-coherence",  "train-selector", "train-generator-ml",
                                           "train-generator-rl", "connect", "select", "summarize", "evaluate",
                                           "quality-stats"};
  std::vector<fs::path> roots;
  for (int run = 0; run < 2; ++run) {
    auto dir = scratch("full" + std::to_string(run));
    auto cfg = tiny_run(dir);
    for (const auto& s : stages) {
      INFO("stage " << s);
      auto m = run_stage(s, cfg);
      CHECK(m.stage == s);
      CHECK(m.metrics["seed"] == 3);
    }
    roots.push_back(dir / "run");
  }
  for (const auto& s : stages) CHECK(slurp(roots[0] / "metrics" / (s + ".json")) == slurp(roots[1] / "metrics" / (s + ".json")));
  for (const char* ck : {"coherence", "selector", "generator_ml", "generator_rl", "selector_connected"}) {
    CHECK(slurp(roots[0] / ck / "params.bin") == slurp(roots[1] / ck / "params.bin"));
    CHECK(fs::exists(roots[0] / ck / "pipeline.cfg"));
  }
  CHECK(slurp(roots[0] / "summaries.jsonl") == slurp(roots[1] / "summaries.jsonl"));

  auto rl = nlohmann::json::parse(slurp(roots[0] / "metrics" / "train-generator-rl.json"));
  CHECK(rl["reward"]["gamma_coh"] == 0.01);
  CHECK(rl["reward"]["gamma_ref"] == 0.005);
  CHECK(rl["reward"]["gamma_app"] == 0.005);
  auto eval = nlohmann::json::parse(slurp(roots[0] / "metrics" / "evaluate.json"));
  CHECK(eval["articles"] == 16);
  auto connect = nlohmann::json::parse(slurp(roots[0] / "metrics" / "connect.json"));
  auto gen_rl = nlohmann::json::parse(slurp(roots[0] / "metrics" / "train-generator-rl.json"));
  CHECK(connect["generator_checksum"] == gen_rl["checksum"]);
  auto manifest = nlohmann::json::parse(slurp(roots[0] / "manifest" / "evaluate.json"));
  CHECK(manifest.contains("wall_clock_seconds"));
  CHECK(manifest["metrics"] == eval);
  for (const auto& r : roots) fs::remove_all(r.parent_path());
}
