#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "seneca/layers.hpp"
#include "seneca/optim.hpp"
#include "seneca/rewards.hpp"
#include "seneca/text.hpp"

namespace seneca::coherence {
class CoherenceModel;
}

namespace seneca::generator {

using text::Sentence;

struct GeneratorConfig {
  std::size_t embedding_dim = 128;
  std::size_t encoder_hidden = 256;  // per direction
  std::size_t decoder_hidden = 256;
  std::size_t attention_dim = 128;
};

// Selected sentences concatenated in selection order, with the source-side
// vocabulary extension used by the copy mechanism.
struct ExtractedInput {
  std::string article_id;
  Sentence tokens;
  std::vector<int> ids;      // vocabulary ids, <unk> for out-of-vocabulary tokens
  std::vector<int> ext_ids;  // vocabulary id, or V + k for the k-th distinct OOV source token
  std::vector<std::string> oov;
};

ExtractedInput make_input(std::string article_id, const Sentence& tokens, const text::Vocabulary& vocab);
ExtractedInput make_input(const text::Article& article, const std::vector<int>& indices,
                          const text::Vocabulary& vocab);

enum class DecodeMode { greedy, sampled, beam };

struct DecodedSummary {
  Sentence tokens;              // stop token excluded
  std::vector<int> ids;         // extended ids, stop excluded
  std::vector<double> log_probs;  // per emitted token, including the stop step when reached
  double score = 0.0;           // total log-probability / length^alpha
  DecodeMode mode = DecodeMode::greedy;
};

struct DecodeOptions {
  std::size_t max_len = 60;
  std::size_t beam = 1;
  double alpha = 1.0;  // length-normalization exponent
  bool block_trigrams = true;
};

struct DecoderState {
  tensor::LstmState lstm;
  tensor::Var context;  // attention context of the previous step, fed back as input
};

struct EncodedInput {
  tensor::Var states;  // [T x 2H]
  tensor::Var keys;    // [T x A]
  DecoderState initial;
};

struct StepOutput {
  tensor::Var distribution;  // [V + k] mixed vocabulary and copy distribution
  tensor::Var p_gen;         // [1]
  tensor::Var attention;     // [T]
};

// Attention-based sequence-to-sequence generator with a pointer-generator copy gate.
class Generator {
 public:
  Generator(text::Vocabulary vocab, const GeneratorConfig& config, Rng& rng);

  template <class Store>
  EncodedInput encode(tensor::Tape& tape, Store& store, const ExtractedInput& input) const;

  // Feeds the previous extended id (OOV ids are embedded as <unk>).
  // `force_p_gen` pins the gate, for probing the two paths.
  template <class Store>
  StepOutput step(tensor::Tape& tape, Store& store, const ExtractedInput& input, const EncodedInput& enc,
                  DecoderState& state, int previous, std::optional<double> force_p_gen = std::nullopt) const;

  // Extended target ids for a reference, followed by the stop id.
  std::vector<int> target_ids(const ExtractedInput& input, const Sentence& reference) const;

  // Sum of log p(y_t) under teacher forcing, stop step included.
  template <class Store>
  tensor::Var sequence_log_prob(tensor::Tape& tape, Store& store, const ExtractedInput& input,
                                const EncodedInput& enc, const std::vector<int>& targets) const;

  DecodedSummary greedy_decode(const ExtractedInput& input, const DecodeOptions& options = {}) const;
  DecodedSummary beam_decode(const ExtractedInput& input, const DecodeOptions& options = {}) const;
  // Multinomial sampling from the full mixed distribution at the given
  // temperature; temperature 0 takes the argmax. No trigram blocking.
  DecodedSummary sample_decode(const ExtractedInput& input, Rng& rng, std::size_t max_len = 60,
                               double temperature = 1.0) const;

  std::string token_of(const ExtractedInput& input, int ext_id) const;

  tensor::ParameterStore& params() { return params_; }
  const tensor::ParameterStore& params() const { return params_; }
  const text::Vocabulary& vocab() const { return vocab_; }
  const GeneratorConfig& config() const { return config_; }

  // Optimizer updates applied so far (stored in the checkpoint as meta/updates).
  std::uint64_t updates() const;
  void count_update();

  void save(const std::filesystem::path& dir) const;
  static Generator load(const std::filesystem::path& dir);

 private:
  text::Vocabulary vocab_;
  GeneratorConfig config_;
  tensor::ParameterStore params_;
  tensor::ParamId embedding_ = 0;
  tensor::ParamId updates_ = 0;
  tensor::BiLstm encoder_;
  tensor::Linear init_;
  tensor::ParamId key_proj_ = 0;
  tensor::AdditiveAttention attention_;
  tensor::LstmCell decoder_;
  tensor::Linear vocab_out_;
  tensor::Linear gate_;
};

// Trigram check used by decoding: would appending `next` repeat a trigram?
bool repeats_trigram(const std::vector<int>& ids, int next);

struct MlExample {
  ExtractedInput input;
  Sentence reference;
};

struct MlOptions {
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  double lr = 0.001;
  double clip_norm = 2.0;
  std::uint64_t seed = 1;
};

struct MlReport {
  std::vector<double> epoch_loss;  // per-token negative log-likelihood
  std::size_t skipped = 0;         // examples with an empty reference
};

// Teacher forcing. Examples with an empty reference are skipped and counted.
// Throws std::invalid_argument when no usable example remains.
MlReport train_ml(Generator& generator, const std::vector<MlExample>& examples, const MlOptions& options);

// Maps (summary tokens, reference sentences) to a reward breakdown.
using RewardFn = std::function<rewards::RewardBreakdown(const Sentence&, const std::vector<Sentence>&)>;

// ROUGE reward plus the enabled rule and coherence terms. `coherence` may be
// null when the coherence term is disabled.
RewardFn make_reward_fn(const rewards::RewardConfig& config, const coherence::CoherenceModel* coherence = nullptr);

struct RlExample {
  ExtractedInput input;
  std::vector<Sentence> reference;
};

struct RlOptions {
  std::size_t samples_per_item = 5;
  double lr = 0.0001;
  double clip_norm = 2.0;
  std::size_t max_len = 60;
  double temperature = 1.0;
};

struct RlStepReport {
  double loss = 0.0;
  double mean_sample_reward = 0.0;
  double mean_baseline_reward = 0.0;
  bool updated = false;
};

// Self-critical policy gradient: loss = -(1/N') sum (R(y^s) - R(y_hat)) log p(y^s)
// with y_hat the greedy argmax decode (no gradient) and N' the number of samples.
class SelfCriticalTrainer {
 public:
  SelfCriticalTrainer(Generator& generator, RewardFn reward, RlOptions options, std::uint64_t seed);

  RlStepReport step(const std::vector<RlExample>& batch);

 private:
  Generator& generator_;
  RewardFn reward_;
  RlOptions options_;
  tensor::Adam adam_;
  Rng rng_;
};

}  // namespace seneca::generator
