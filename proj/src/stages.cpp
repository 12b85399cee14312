#include <chrono>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <sstream>

#include "seneca/oracle.hpp"
#include "seneca/pipeline.hpp"
#include "seneca/rouge.hpp"
#include "seneca/toy_corpus.hpp"

namespace seneca::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t hash_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return tensor::fnv1a(bytes.data(), bytes.size());
}

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names = {
      "make-toy-corpus",    "ingest",   "make-labels", "train-coherence", "eval-coherence",
      "train-selector",     "train-generator-ml", "train-generator-rl", "connect", "select",
      "summarize",          "evaluate", "quality-stats"};
  return names;
}

namespace {

struct Paths {
  fs::path root;
  fs::path corpus() const { return root / "corpus.jsonl"; }
  fs::path vocab() const { return root / "vocab.txt"; }
  fs::path labels() const { return root / "labels.jsonl"; }
  fs::path triples() const { return root / "triples.jsonl"; }
  fs::path coherence() const { return root / "coherence"; }
  fs::path selector() const { return root / "selector"; }
  fs::path selector_connected() const { return root / "selector_connected"; }
  fs::path generator_ml() const { return root / "generator_ml"; }
  fs::path generator_rl() const { return root / "generator_rl"; }
  fs::path selections() const { return root / "selections.jsonl"; }
  fs::path summaries() const { return root / "summaries.jsonl"; }
  fs::path eval_csv() const { return root / "eval.csv"; }
  fs::path quality_csv() const { return root / "quality.csv"; }
};

class Stage {
 public:
  Stage(std::string name, const PipelineConfig& cfg) : name_(std::move(name)), cfg_(cfg), paths_{cfg.out_dir} {}

  void need(const fs::path& path, const std::string& producer) const {
    if (!fs::exists(path)) {
      throw PrerequisiteError("stage '" + name_ + "' needs " + path.string() + "; run '" + producer + "' first");
    }
  }

  std::vector<text::Article> corpus() const {
    need(paths_.corpus(), "ingest");
    return text::read_corpus(paths_.corpus());
  }

  std::vector<text::Article> eval_corpus() const {
    if (cfg_.eval_corpus.empty()) return corpus();
    if (!fs::exists(cfg_.eval_corpus)) throw PrerequisiteError("evaluation corpus " + cfg_.eval_corpus + " not found");
    return text::read_corpus(fs::path(cfg_.eval_corpus));
  }

  text::Vocabulary vocab() const {
    need(paths_.vocab(), "ingest");
    return text::Vocabulary::load(paths_.vocab());
  }

  std::vector<oracle::SelectionLabel> labels(const std::vector<text::Article>& corpus) const {
    need(paths_.labels(), "make-labels");
    std::ifstream in(paths_.labels());
    std::vector<oracle::SelectionLabel> out;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto j = json::parse(line);
      out.push_back({j.at("id").get<std::string>(), j.at("indices").get<std::vector<int>>()});
    }
    if (out.size() != corpus.size()) {
      throw std::runtime_error("labels.jsonl has " + std::to_string(out.size()) + " rows for " +
                               std::to_string(corpus.size()) + " articles; rerun 'make-labels'");
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (out[i].article_id != corpus[i].id) {
        throw std::runtime_error("labels.jsonl row " + std::to_string(i) + " is for '" + out[i].article_id +
                                 "', expected '" + corpus[i].id + "'");
      }
    }
    return out;
  }

  fs::path selector_dir(const std::string& which) const {
    if (which == "connected") {
      need(paths_.selector_connected() / "params.bin", "connect");
      return paths_.selector_connected();
    }
    need(paths_.selector() / "params.bin", "train-selector");
    return paths_.selector();
  }

  fs::path generator_dir(const std::string& which) const {
    if (which == "rl") {
      need(paths_.generator_rl() / "params.bin", "train-generator-rl");
      return paths_.generator_rl();
    }
    need(paths_.generator_ml() / "params.bin", "train-generator-ml");
    return paths_.generator_ml();
  }

  std::optional<coherence::CoherenceModel> coherence_if_present() const {
    if (!fs::exists(paths_.coherence() / "params.bin")) return std::nullopt;
    return coherence::CoherenceModel::load(paths_.coherence());
  }

  coherence::CoherenceModel coherence_model() const {
    need(paths_.coherence() / "params.bin", "train-coherence");
    return coherence::CoherenceModel::load(paths_.coherence());
  }

  void stamp(const fs::path& checkpoint) const {
    std::ofstream(checkpoint / "pipeline.cfg") << cfg_.serialize();
  }

  const std::string& name() const { return name_; }
  const PipelineConfig& cfg() const { return cfg_; }
  const Paths& paths() const { return paths_; }

 private:
  std::string name_;
  const PipelineConfig& cfg_;
  Paths paths_;
};

json reward_json(const rewards::RewardConfig& r) {
  return {{"gamma_coh", r.gamma_coh}, {"gamma_ref", r.gamma_ref}, {"gamma_app", r.gamma_app},
          {"use_coh", r.use_coh},     {"use_ref", r.use_ref},     {"use_app", r.use_app}};
}

Sentence split_tokens(const std::string& s) {
  Sentence out;
  std::istringstream in(s);
  std::string t;
  while (in >> t) out.push_back(t);
  return out;
}

struct SystemSummaries {
  std::vector<std::string> ids;
  std::vector<Sentence> tokens;
};

SystemSummaries read_summaries(const fs::path& path) {
  std::ifstream in(path);
  SystemSummaries out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = json::parse(line);
    out.ids.push_back(j.at("id").get<std::string>());
    out.tokens.push_back(split_tokens(j.at("summary").get<std::string>()));
  }
  return out;
}

std::vector<std::vector<Sentence>> aligned_references(const SystemSummaries& sys,
                                                      const std::vector<text::Article>& corpus) {
  if (sys.ids.size() != corpus.size()) {
    throw std::invalid_argument(std::to_string(sys.ids.size()) + " summaries for " + std::to_string(corpus.size()) +
                                " articles");
  }
  std::vector<std::vector<Sentence>> refs;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (sys.ids[i] != corpus[i].id) {
      throw std::invalid_argument("summary " + std::to_string(i) + " is for '" + sys.ids[i] + "', expected '" +
                                  corpus[i].id + "'");
    }
    refs.push_back(corpus[i].summary);
  }
  return refs;
}

json make_toy_corpus_stage(const Stage& st) {
  const auto& cfg = st.cfg();
  auto raw = cfg.toy_kind == "planted" ? toy::make_planted_corpus(cfg.seed, cfg.toy_size)
                                       : toy::make_toy_corpus(cfg.seed, cfg.toy_size);
  fs::path path(cfg.corpus);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write corpus " + path.string());
  text::write_corpus(out, raw);
  std::size_t summary_sentences = 0;
  for (const auto& a : raw) summary_sentences += a.summary.size();
  return {{"articles", raw.size()},
          {"kind", cfg.toy_kind},
          {"mean_summary_sentences", static_cast<double>(summary_sentences) / static_cast<double>(raw.size())}};
}

json ingest(const Stage& st) {
  const auto& cfg = st.cfg();
  if (!fs::exists(cfg.corpus)) {
    throw PrerequisiteError("stage 'ingest' needs corpus " + cfg.corpus + "; run 'make-toy-corpus' or set corpus");
  }
  auto corpus = text::read_corpus(fs::path(cfg.corpus));
  if (corpus.empty()) throw std::invalid_argument("ingest: corpus " + cfg.corpus + " has no articles");
  fs::create_directories(st.paths().root);
  if (fs::absolute(cfg.corpus) != fs::absolute(st.paths().corpus())) {
    fs::copy_file(cfg.corpus, st.paths().corpus(), fs::copy_options::overwrite_existing);
  }
  auto vocab = text::Vocabulary::build(corpus, cfg.vocab_cap);
  vocab.save(st.paths().vocab());
  std::size_t sentences = 0, tokens = 0;
  for (const auto& a : corpus) {
    sentences += a.sentences.size();
    for (const auto& s : a.sentences) tokens += s.size();
  }
  return {{"articles", corpus.size()}, {"sentences", sentences}, {"tokens", tokens}, {"vocab_size", vocab.size()}};
}

json make_labels(const Stage& st) {
  auto corpus = st.corpus();
  std::ofstream out(st.paths().labels(), std::ios::trunc);
  std::size_t total = 0, fallbacks = 0;
  for (const auto& a : corpus) {
    if (a.sentences.empty()) throw std::invalid_argument("make-labels: article '" + a.id + "' has no sentences");
    if (oracle::greedy_rouge2_selection(a.sentences, a.summary).empty() &&
        oracle::augment_by_rougeL_recall(a.sentences, a.summary).empty()) {
      ++fallbacks;
    }
    auto label = oracle::build_labels(a);
    total += label.indices.size();
    out << json{{"id", label.article_id}, {"indices", label.indices}}.dump() << '\n';
  }
  return {{"articles", corpus.size()},
          {"mean_label_length", static_cast<double>(total) / static_cast<double>(corpus.size())},
          {"fallbacks", fallbacks}};
}

json train_coherence_stage(const Stage& st) {
  const auto& cfg = st.cfg();
  auto corpus = st.corpus();
  auto vocab = st.vocab();
  Rng rng(cfg.seed);
  auto triples = coherence::build_coherence_triples(corpus, rng, cfg.triples);
  if (cfg.coh_max_triples > 0 && triples.size() > cfg.coh_max_triples) triples.resize(cfg.coh_max_triples);
  {
    std::ofstream out(st.paths().triples(), std::ios::trunc);
    coherence::write_triples(out, triples);
  }
  std::size_t self = 0;
  for (const auto& t : triples) self += t.provenance == coherence::Provenance::self_repetition;
  Rng init(cfg.seed);
  coherence::CoherenceModel model(vocab, cfg.coh_model, init);
  auto opts = cfg.coh_train;
  opts.seed = cfg.seed;
  auto report = coherence::train_coherence(model, triples, opts);
  model.save(st.paths().coherence());
  st.stamp(st.paths().coherence());
  return {{"triples", triples.size()},
          {"self_repetition_triples", self},
          {"epoch_loss", report.epoch_loss},
          {"epoch_accuracy", report.epoch_accuracy},
          {"checksum", model.params().checksum()}};
}

json eval_coherence(const Stage& st) {
  auto model = st.coherence_model();
  auto corpus = st.eval_corpus();
  Rng rng(st.cfg().seed);
  auto sets = coherence::build_diagnostic_sets(corpus, rng);
  json j;
  j["pairwise_items"] = sets.pairwise.size();
  j["shuffle_items"] = sets.shuffle.size();
  j["overlap_items"] = sets.overlap.size();
  j["pairwise"] = sets.pairwise.empty() ? 0.0 : coherence::pairwise_accuracy(model, sets.pairwise);
  j["shuffle"] = sets.shuffle.empty() ? 0.0 : coherence::shuffle_accuracy(model, sets.shuffle);
  j["overlap"] = sets.overlap.empty() ? 0.0 : coherence::overlap_accuracy(model, sets.overlap);
  return j;
}

json train_selector_stage(const Stage& st) {
  const auto& cfg = st.cfg();
  auto corpus = st.corpus();
  auto vocab = st.vocab();
  auto labels = st.labels(corpus);
  std::vector<selector::SelectorInput> inputs;
  for (const auto& a : corpus) inputs.push_back(selector::prepare_input(a, cfg.sel_model.salient_k));
  Rng init(cfg.seed);
  selector::Selector sel(vocab, cfg.sel_model, init);
  auto opts = cfg.sel_train;
  opts.seed = cfg.seed;
  auto report = selector::train_selector(sel, inputs, labels, opts);
  sel.save(st.paths().selector());
  st.stamp(st.paths().selector());
  return {{"epoch_loss", report.epoch_loss},
          {"max_clipped_norm", report.max_clipped_norm},
          {"checksum", sel.params().checksum()}};
}

json train_generator_ml(const Stage& st) {
  const auto& cfg = st.cfg();
  auto corpus = st.corpus();
  auto vocab = st.vocab();
  auto labels = st.labels(corpus);
  std::vector<generator::MlExample> examples;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    examples.push_back({generator::make_input(corpus[i], labels[i].indices, vocab), text::flatten(corpus[i].summary)});
  }
  Rng init(cfg.seed);
  generator::Generator gen(vocab, cfg.gen_model, init);
  auto opts = cfg.gen_ml;
  opts.seed = cfg.seed;
  auto report = generator::train_ml(gen, examples, opts);
  gen.save(st.paths().generator_ml());
  st.stamp(st.paths().generator_ml());
  return {{"epoch_loss", report.epoch_loss},
          {"skipped_empty_reference", report.skipped},
          {"updates", gen.updates()},
          {"checksum", gen.params().checksum()}};
}

json train_generator_rl(const Stage& st) {
  const auto& cfg = st.cfg();
  auto corpus = st.corpus();
  auto labels = st.labels(corpus);
  auto gen = generator::Generator::load(st.generator_dir("ml"));
  std::optional<coherence::CoherenceModel> coh;
  if (cfg.reward.use_coh) coh = st.coherence_model();
  std::vector<generator::RlExample> examples;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (corpus[i].summary.empty()) continue;
    examples.push_back({generator::make_input(corpus[i], labels[i].indices, gen.vocab()), corpus[i].summary});
  }
  if (examples.empty()) throw std::invalid_argument("train-generator-rl: no article has a reference summary");
  generator::SelfCriticalTrainer trainer(gen, generator::make_reward_fn(cfg.reward, coh ? &*coh : nullptr),
                                         cfg.gen_rl, cfg.seed);
  Rng pick(cfg.seed + 1);
  std::vector<double> sample_reward, baseline_reward;
  for (std::size_t step = 0; step < cfg.rl_steps; ++step) {
    std::vector<generator::RlExample> batch;
    for (std::size_t b = 0; b < cfg.rl_batch; ++b) batch.push_back(examples[pick.index(examples.size())]);
    auto r = trainer.step(batch);
    sample_reward.push_back(r.mean_sample_reward);
    baseline_reward.push_back(r.mean_baseline_reward);
  }
  gen.save(st.paths().generator_rl());
  st.stamp(st.paths().generator_rl());
  return {{"steps", cfg.rl_steps},
          {"mean_sample_reward", sample_reward},
          {"mean_baseline_reward", baseline_reward},
          {"reward", reward_json(cfg.reward)},
          {"updates", gen.updates()},
          {"checksum", gen.params().checksum()}};
}

json connect_stage(const Stage& st) {
  const auto& cfg = st.cfg();
  auto corpus = st.corpus();
  auto gen_dir = st.generator_dir(cfg.connect_generator);
  auto sel = selector::Selector::load(st.selector_dir("base"));
  const auto gen = generator::Generator::load(gen_dir);
  std::uint64_t file_before = hash_file(gen_dir / "params.bin");
  std::uint64_t before = gen.params().checksum();
  auto opts = cfg.connect;
  opts.seed = cfg.seed;
  auto report = connect_rl(sel, gen, corpus, opts);
  if (gen.params().checksum() != before || hash_file(gen_dir / "params.bin") != file_before) {
    throw std::logic_error("connect: generator parameters changed");
  }
  sel.save(st.paths().selector_connected());
  st.stamp(st.paths().selector_connected());
  return {{"steps", opts.steps},
          {"updates", report.updates},
          {"mean_advantage", report.mean_advantage},
          {"mean_reward", report.mean_reward},
          {"generator", cfg.connect_generator},
          {"generator_checksum", before},
          {"checksum", sel.params().checksum()}};
}

json select_stage(const Stage& st) {
  const auto& cfg = st.cfg();
  auto sel = selector::Selector::load(st.selector_dir(cfg.summarize_selector));
  auto corpus = st.eval_corpus();
  std::ofstream out(st.paths().selections(), std::ios::trunc);
  std::size_t total = 0;
  for (const auto& a : corpus) {
    auto picked = sel.select(selector::prepare_input(a, sel.config().salient_k), cfg.max_select).indices;
    total += picked.size();
    out << json{{"id", a.id}, {"indices", picked}}.dump() << '\n';
  }
  return {{"articles", corpus.size()},
          {"mean_selected", corpus.empty() ? 0.0 : static_cast<double>(total) / static_cast<double>(corpus.size())}};
}

json summarize_stage(const Stage& st) {
  const auto& cfg = st.cfg();
  auto sel = selector::Selector::load(st.selector_dir(cfg.summarize_selector));
  fs::path gen_dir = cfg.summarize_checkpoint.empty() ? st.generator_dir(cfg.summarize_generator)
                                                      : fs::path(cfg.summarize_checkpoint);
  if (!fs::exists(gen_dir / "params.bin")) throw PrerequisiteError("generator checkpoint " + gen_dir.string() + " not found");
  auto gen = generator::Generator::load(gen_dir);
  auto coh = st.coherence_if_present();
  auto corpus = st.eval_corpus();
  std::ofstream out(st.paths().summaries(), std::ios::trunc);
  double length = 0.0, coherence_sum = 0.0;
  for (const auto& a : corpus) {
    auto s = summarize_end_to_end(a, sel, gen, cfg.decode, cfg.max_select, coh ? &*coh : nullptr);
    length += static_cast<double>(s.tokens.size());
    if (s.coherence) coherence_sum += *s.coherence;
    out << json{{"id", a.id}, {"summary", text::join(s.tokens)}}.dump() << '\n';
  }
  const double n = std::max<double>(1.0, static_cast<double>(corpus.size()));
  json j = {{"articles", corpus.size()},
            {"mean_length", length / n},
            {"beam", cfg.decode.beam},
            {"alpha", cfg.decode.alpha},
            {"max_len", cfg.decode.max_len}};
  if (coh) j["mean_coherence"] = coherence_sum / n;
  return j;
}

json evaluate_stage(const Stage& st) {
  st.need(st.paths().summaries(), "summarize");
  auto model = st.coherence_model();
  auto sys = read_summaries(st.paths().summaries());
  auto refs = aligned_references(sys, st.eval_corpus());
  auto report = evaluate_corpus(sys.ids, sys.tokens, refs, &model);
  std::ofstream out(st.paths().eval_csv(), std::ios::trunc);
  write_eval_csv(out, report);
  return eval_json(report);
}

json quality_stats_stage(const Stage& st) {
  st.need(st.paths().summaries(), "summarize");
  auto sys = read_summaries(st.paths().summaries());
  auto refs = aligned_references(sys, st.eval_corpus());
  std::vector<std::vector<Sentence>> summaries;
  for (const auto& t : sys.tokens) summaries.push_back(coherence::split_sentences(t));
  auto stats = rewards::corpus_quality_stats(summaries, refs);
  std::ofstream out(st.paths().quality_csv(), std::ios::trunc);
  rewards::write_quality_csv(out, stats);
  return {{"summaries", stats.count},
          {"ref_pct", stats.ref_pct},
          {"relcl_pct", stats.relcl_pct},
          {"app_pct", stats.app_pct}};
}

}  // namespace

RunManifest run_stage(const std::string& stage, const PipelineConfig& cfg) {
  static const std::map<std::string, std::function<json(const Stage&)>> table = {
      {"make-toy-corpus", make_toy_corpus_stage},
      {"ingest", ingest},
      {"make-labels", make_labels},
      {"train-coherence", train_coherence_stage},
      {"eval-coherence", eval_coherence},
      {"train-selector", train_selector_stage},
      {"train-generator-ml", train_generator_ml},
      {"train-generator-rl", train_generator_rl},
      {"connect", connect_stage},
      {"select", select_stage},
      {"summarize", summarize_stage},
      {"evaluate", evaluate_stage},
      {"quality-stats", quality_stats_stage},
  };
  auto it = table.find(stage);
  if (it == table.end()) {
    std::string known;
    for (const auto& n : stage_names()) known += (known.empty() ? "" : ", ") + n;
    throw std::invalid_argument("unknown stage '" + stage + "' (known: " + known + ")");
  }
  cfg.validate();
  Stage st(stage, cfg);
  auto start = std::chrono::steady_clock::now();
  json metrics = it->second(st);
  double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  RunManifest m;
  m.stage = stage;
  std::string text = cfg.serialize();
  m.config_hash = tensor::fnv1a(text.data(), text.size());
  if (fs::exists(st.paths().corpus())) {
    m.corpus_hash = hash_file(st.paths().corpus());
  } else if (fs::exists(cfg.corpus)) {
    m.corpus_hash = hash_file(cfg.corpus);
  }
  metrics["stage"] = stage;
  metrics["seed"] = cfg.seed;
  m.metrics = metrics;
  m.wall_clock_seconds = seconds;

  fs::create_directories(st.paths().root / "metrics");
  fs::create_directories(st.paths().root / "manifest");
  std::ofstream(st.paths().root / "metrics" / (stage + ".json"), std::ios::trunc) << metrics.dump(2) << '\n';
  json manifest = {{"stage", stage},
                   {"config_hash", m.config_hash},
                   {"corpus_hash", m.corpus_hash},
                   {"metrics", metrics},
                   {"wall_clock_seconds", seconds}};
  std::ofstream(st.paths().root / "manifest" / (stage + ".json"), std::ios::trunc) << manifest.dump(2) << '\n';
  return m;
}

}  // namespace seneca::pipeline
