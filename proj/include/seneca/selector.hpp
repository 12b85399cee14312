#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "seneca/layers.hpp"
#include "seneca/mentions.hpp"
#include "seneca/optim.hpp"
#include "seneca/oracle.hpp"

namespace seneca::selector {

using text::Sentence;

struct SelectorConfig {
  std::size_t embedding_dim = 128;
  std::vector<std::size_t> widths = {1, 2, 3, 4};
  std::size_t filters_per_width = 25;  // sentence and entity representations: widths x filters
  std::size_t encoder_hidden = 256;    // per direction
  std::size_t decoder_hidden = 256;
  std::size_t attention_dim = 128;
  std::size_t salient_k = 6;
  bool mask_repeats = true;
};

// Sentences and salient entity mention sequences of one article.
struct SelectorInput {
  std::vector<Sentence> sentences;
  std::vector<Sentence> entities;
};

SelectorInput prepare_input(const text::Article& article, std::size_t salient_k = 6,
                            const text::Lexicons& lex = text::Lexicons::bundled());

struct EncodedArticle {
  tensor::Var sentence_reprs;  // r_j  [S x C]
  tensor::Var article_states;  // h_j  [S x 2H]
  tensor::Var entity_reprs;    // e_i  [E x C]; invalid when E = 0
  std::size_t sentences = 0;
  std::size_t entities = 0;

  // Cached projections.
  tensor::Var glimpse_keys;  // W_h2 h_j        [S x A]
  tensor::Var entity_keys;   // W_e2 e_i        [E x A]
  tensor::Var pointer_keys;  // W_p4 [h_j; stop] [(S+1) x A]
};

struct StepResult {
  tensor::Var logits;             // [S+1], stop last; masked entries are not -inf here
  tensor::Var entity_attention;   // [E] or invalid
  tensor::Var glimpse_attention;  // [S]
  tensor::Var entity_context;     // [C]
};

struct SelectorOutput {
  std::vector<int> indices;                       // decode order, stop excluded
  std::vector<std::vector<double>> distributions; // one per step over S+1 entries, stop last
  bool stopped = false;                           // emitted the stop token
};

// Entity-aware pointer decoder over sentences with a stop candidate.
class Selector {
 public:
  Selector(text::Vocabulary vocab, const SelectorConfig& config, Rng& rng);

  template <class Store>
  EncodedArticle encode(tensor::Tape& tape, Store& store, const SelectorInput& input) const;

  template <class Store>
  tensor::LstmState initial_state(tensor::Tape& tape, Store& store, const EncodedArticle& enc) const;

  // One decoder step from `state` fed with the representation of the previous
  // pick (or the learned start vector when previous < 0).
  template <class Store>
  StepResult step(tensor::Tape& tape, Store& store, const EncodedArticle& enc, tensor::LstmState& state,
                  int previous) const;

  // Sum over steps of -log p(label_t), then -log p(stop). Labels must be
  // distinct and in range.
  template <class Store>
  tensor::Var sequence_nll(tensor::Tape& tape, Store& store, const SelectorInput& input,
                           const std::vector<int>& labels, bool include_stop = true) const;

  SelectorOutput select(const SelectorInput& input, std::size_t max_steps = 6) const;
  // Samples each step from the masked distribution.
  SelectorOutput sample(const SelectorInput& input, Rng& rng, std::size_t max_steps = 6) const;

  // Masked probability distribution of the first step.
  std::vector<double> first_step_distribution(const SelectorInput& input) const;

  tensor::ParameterStore& params() { return params_; }
  const tensor::ParameterStore& params() const { return params_; }
  const text::Vocabulary& vocab() const { return vocab_; }
  const SelectorConfig& config() const { return config_; }

  void save(const std::filesystem::path& dir) const;
  static Selector load(const std::filesystem::path& dir);

 private:
  SelectorOutput run(const SelectorInput& input, Rng* rng, std::size_t max_steps) const;
  std::vector<bool> mask_for(std::size_t sentences, const std::vector<int>& picked) const;

  text::Vocabulary vocab_;
  SelectorConfig config_;
  tensor::ParameterStore params_;
  tensor::ParamId embedding_ = 0;
  tensor::ConvEncoder entity_encoder_;
  tensor::ConvEncoder sentence_encoder_;
  tensor::BiLstm article_encoder_;
  tensor::LstmCell decoder_;
  tensor::Linear init_;
  tensor::ParamId start_ = 0;
  tensor::ParamId stop_key_ = 0;
  tensor::ParamId we1_ = 0, we2_ = 0, ve_ = 0;
  tensor::ParamId wh1_ = 0, wh2_ = 0, vh_ = 0;
  tensor::ParamId wp1_ = 0, wp2_ = 0, wp3_ = 0, wp4_ = 0, vq_ = 0;
};

struct TrainOptions {
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  double lr = 0.001;
  double clip_norm = 2.0;
  std::uint64_t seed = 1;
};

struct TrainReport {
  std::vector<double> epoch_loss;  // mean per-article NLL
  double max_clipped_norm = 0.0;   // largest post-clip global norm seen
};

// Teacher-forced cross-entropy on oracle labels. Throws std::out_of_range
// when a label index is outside its article.
TrainReport train_selector(Selector& selector, const std::vector<SelectorInput>& inputs,
                           const std::vector<oracle::SelectionLabel>& labels, const TrainOptions& options);

}  // namespace seneca::selector
