#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>
#include <vector>

#include "seneca/layers.hpp"
#include "seneca/mentions.hpp"
#include "seneca/optim.hpp"

namespace seneca::coherence {

using text::Sentence;

enum class Provenance { adjacent_entity, self_repetition };

struct CoherenceTriple {
  Sentence target;
  Sentence positive;
  Sentence negative;
  Provenance provenance = Provenance::adjacent_entity;

  bool operator==(const CoherenceTriple&) const = default;
};

struct TripleOptions {
  std::size_t max_negative_distance = 9;
  double self_repetition_fraction = 0.5;
};

// For every adjacent sentence pair sharing a mention cluster: one triple with
// a random negative within the distance bound that shares no cluster with the
// target (skipped when none exists), plus a self-repetition triple for the
// configured fraction of such pairs. Within an article the k-th pair (from 0)
// gets one when ceil((k+1) f) > ceil(k f), so the first pair always does.
std::vector<CoherenceTriple> build_coherence_triples(const text::Article& article,
                                                     const std::vector<text::MentionCluster>& clusters, Rng& rng,
                                                     const TripleOptions& options = {});
std::vector<CoherenceTriple> build_coherence_triples(const std::vector<text::Article>& corpus, Rng& rng,
                                                     const TripleOptions& options = {},
                                                     const text::Lexicons& lex = text::Lexicons::bundled());

void write_triples(std::ostream& out, const std::vector<CoherenceTriple>& triples);
std::vector<CoherenceTriple> read_triples(std::istream& in);

struct ModelConfig {
  std::size_t embedding_dim = 32;
  std::vector<std::size_t> widths = {1, 2, 3};
  std::size_t filters_per_width = 32;
  std::size_t hidden = 64;
};

// Scores a sentence pair in [-1, 1]: a shared convolutional encoder per
// sentence, then tanh(W2 tanh(W1 [a; b; a - b] + b1) + b2).
class CoherenceModel {
 public:
  CoherenceModel(text::Vocabulary vocab, const ModelConfig& config, Rng& rng);

  // Throws std::invalid_argument on an empty sentence.
  template <class Store>
  tensor::Var score(tensor::Tape& tape, Store& store, const Sentence& a, const Sentence& b) const;

  double score(const Sentence& a, const Sentence& b) const;

  tensor::ParameterStore& params() { return params_; }
  const tensor::ParameterStore& params() const { return params_; }
  const text::Vocabulary& vocab() const { return vocab_; }
  const ModelConfig& config() const { return config_; }

  void save(const std::filesystem::path& dir) const;
  static CoherenceModel load(const std::filesystem::path& dir);

 private:
  template <class Store>
  tensor::Var encode(tensor::Tape& tape, Store& store, const Sentence& s) const;

  text::Vocabulary vocab_;
  ModelConfig config_;
  tensor::ParameterStore params_;
  tensor::ParamId embedding_ = 0;
  tensor::ConvEncoder encoder_;
  tensor::Linear hidden_;
  tensor::Linear out_;
};

// Margin loss max{0, 1 - Coh(target, positive) + Coh(target, negative)}.
tensor::Var hinge_loss(tensor::Tape& tape, const CoherenceModel& model, tensor::ParameterStore& store,
                       const CoherenceTriple& t);
double hinge_loss(const CoherenceModel& model, const CoherenceTriple& t);

struct TrainOptions {
  std::size_t epochs = 8;
  std::size_t batch_size = 32;
  double lr = 0.001;
  double clip_norm = 2.0;
  std::uint64_t seed = 1;
};

struct TrainReport {
  std::vector<double> epoch_loss;      // mean hinge loss over the epoch, measured during training
  std::vector<double> epoch_accuracy;  // fraction of triples with Coh(+) > Coh(-) after the epoch
};

// Throws std::invalid_argument on an empty triple set.
TrainReport train_coherence(CoherenceModel& model, const std::vector<CoherenceTriple>& triples,
                            const TrainOptions& options);

// Mean score over consecutive sentence pairs; 0 for fewer than two sentences.
double summary_coherence(const CoherenceModel& model, const std::vector<Sentence>& summary);

struct ShuffleItem {
  std::vector<Sentence> original;
  std::vector<Sentence> shuffled;  // a derangement of original
};

struct OverlapItem {
  Sentence target;
  Sentence positive;
  Sentence negative;  // no content token in common with target
};

struct DiagnosticSets {
  std::vector<CoherenceTriple> pairwise;  // adjacent-entity triples only
  std::vector<ShuffleItem> shuffle;
  std::vector<OverlapItem> overlap;
};

// Built from held-out articles: pairwise from the articles, shuffle from
// reference summaries with at least two sentences, overlap from articles.
DiagnosticSets build_diagnostic_sets(const std::vector<text::Article>& corpus, Rng& rng,
                                     const text::Lexicons& lex = text::Lexicons::bundled());

// Accuracy is the fraction of items where the coherent side scores strictly higher.
double pairwise_accuracy(const CoherenceModel& model, const std::vector<CoherenceTriple>& items);
double shuffle_accuracy(const CoherenceModel& model, const std::vector<ShuffleItem>& items);
double overlap_accuracy(const CoherenceModel& model, const std::vector<OverlapItem>& items);

// Uniformly random permutation with no fixed point; n >= 2.
std::vector<std::size_t> random_derangement(std::size_t n, Rng& rng);

// Splits a flat token sequence into sentences at "." tokens.
std::vector<Sentence> split_sentences(const Sentence& tokens);

template <class Store>
tensor::Var CoherenceModel::encode(tensor::Tape& tape, Store& store, const Sentence& s) const {
  if (s.empty()) throw std::invalid_argument("coherence: empty sentence");
  auto ids = vocab_.encode(s);
  tensor::Var emb = tensor::embedding(tensor::bind(tape, store, embedding_), ids);
  return encoder_.encode(tape, store, emb);
}

template <class Store>
tensor::Var CoherenceModel::score(tensor::Tape& tape, Store& store, const Sentence& a, const Sentence& b) const {
  tensor::Var ea = encode(tape, store, a);
  tensor::Var eb = encode(tape, store, b);
  tensor::Var features = tensor::concat({ea, eb, tensor::sub(ea, eb)});
  tensor::Var h = tensor::tanh(hidden_(tape, store, features));
  return tensor::pick(tensor::tanh(out_(tape, store, h)), 0);
}

}  // namespace seneca::coherence
