#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "seneca/coherence.hpp"
#include "seneca/generator.hpp"
#include "seneca/rewards.hpp"
#include "seneca/selector.hpp"

namespace seneca::pipeline {

using text::Sentence;

struct ConnectOptions {
  std::size_t steps = 20;
  std::size_t batch_size = 50;
  std::size_t samples = 1;  // sampled extractions per article
  double lr = 0.0001;
  double clip_norm = 2.0;
  std::size_t max_select = 6;
  std::size_t max_len = 60;
  std::uint64_t seed = 1;
};

struct ConnectReport {
  std::vector<double> mean_advantage;  // per step
  std::vector<double> mean_reward;     // sampled-extraction ROUGE-1 F1 per step
  std::size_t updates = 0;
};

// Self-critical training of the selector through a frozen generator. The
// sampled extraction is decoded greedily and scored with ROUGE-1 F1 against
// the reference; the baseline is the greedy extraction's summary. Throws
// std::invalid_argument when the generator has never been updated or the
// corpus is empty.
ConnectReport connect_rl(selector::Selector& selector, const generator::Generator& generator,
                         const std::vector<text::Article>& corpus, const ConnectOptions& options);

struct EndToEndSummary {
  std::vector<int> extraction;
  Sentence tokens;
  std::optional<double> coherence;  // set when a coherence model was given
};

// Clusters, salient entities, selector, extraction, generator decode. An
// empty selection falls back to sentence 0.
EndToEndSummary summarize_end_to_end(const text::Article& article, const selector::Selector& selector,
                                     const generator::Generator& generator,
                                     const generator::DecodeOptions& decode = {}, std::size_t max_select = 6,
                                     const coherence::CoherenceModel* coherence = nullptr);

struct EvalRow {
  std::string id;
  double rouge1 = 0.0;
  double rouge2 = 0.0;
  double rougeL = 0.0;
  double coherence = 0.0;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  EvalRow mean;  // id "mean"
};

// Mean ROUGE-1/2/L F1 and summary coherence. Throws std::invalid_argument on
// empty input or mismatched lengths.
EvalReport evaluate_corpus(const std::vector<std::string>& ids, const std::vector<Sentence>& system,
                           const std::vector<std::vector<Sentence>>& references,
                           const coherence::CoherenceModel* coherence = nullptr);
void write_eval_csv(std::ostream& out, const EvalReport& report);
nlohmann::json eval_json(const EvalReport& report);

// Every tunable of a run. Defaults follow the published hyperparameters where
// they exist.
struct PipelineConfig {
  std::string corpus = "corpus.jsonl";
  std::string eval_corpus;  // empty: evaluate on the ingested corpus
  std::string out_dir = "run";
  std::uint64_t seed = 1;
  std::size_t vocab_cap = 50000;

  std::size_t toy_size = 200;
  std::string toy_kind = "chain";  // chain | planted

  coherence::ModelConfig coh_model;
  coherence::TrainOptions coh_train;
  coherence::TripleOptions triples;
  std::size_t coh_max_triples = 0;  // 0: all

  selector::SelectorConfig sel_model;
  selector::TrainOptions sel_train;

  generator::GeneratorConfig gen_model;
  generator::MlOptions gen_ml;
  generator::RlOptions gen_rl;
  std::size_t rl_steps = 50;
  std::size_t rl_batch = 10;
  rewards::RewardConfig reward;

  ConnectOptions connect;
  std::string connect_generator = "rl";  // rl | ml

  generator::DecodeOptions decode;
  std::size_t max_select = 6;
  std::string summarize_selector = "connected";  // connected | base
  std::string summarize_generator = "rl";        // rl | ml
  std::string summarize_checkpoint;              // generator checkpoint directory overriding the above

  // Flat key=value text; '#' starts a comment. Unknown keys and malformed
  // values throw std::invalid_argument naming the line.
  static PipelineConfig parse(std::istream& in);
  static PipelineConfig load(const std::filesystem::path& path);
  void set(const std::string& key, const std::string& value);
  // Every key in a fixed order, so equal configs serialize to equal bytes.
  std::string serialize() const;
  void validate() const;
};

struct RunManifest {
  std::string stage;
  std::uint64_t config_hash = 0;
  std::uint64_t corpus_hash = 0;
  nlohmann::json metrics;
  double wall_clock_seconds = 0.0;
};

class PrerequisiteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

const std::vector<std::string>& stage_names();

// Runs one stage inside cfg.out_dir. Metrics go to metrics/<stage>.json
// (deterministic) and the manifest with timing to manifest/<stage>.json.
// Throws std::invalid_argument for an unknown stage and PrerequisiteError when
// an input produced by an earlier stage is missing.
RunManifest run_stage(const std::string& stage, const PipelineConfig& cfg);

std::uint64_t hash_file(const std::filesystem::path& path);

}  // namespace seneca::pipeline
