#include "seneca/selector.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace seneca::selector {

using namespace seneca::tensor;

SelectorInput prepare_input(const text::Article& article, std::size_t salient_k, const text::Lexicons& lex) {
  SelectorInput in;
  in.sentences = article.sentences;
  auto salient = text::select_salient_clusters(text::extract_mention_clusters(article, lex), salient_k);
  for (const auto& c : salient) in.entities.push_back(text::cluster_to_token_sequence(c));
  return in;
}

Selector::Selector(text::Vocabulary vocab, const SelectorConfig& config, Rng& rng)
    : vocab_(std::move(vocab)), config_(config) {
  const std::size_t d = config.embedding_dim;
  const std::size_t a = config.attention_dim;
  embedding_ = params_.add_uniform("sel/embedding", {vocab_.size(), d}, 0.1, rng);
  entity_encoder_ = ConvEncoder::create(params_, "sel/entity_conv", d, config.widths, config.filters_per_width, rng);
  sentence_encoder_ =
      ConvEncoder::create(params_, "sel/sentence_conv", d, config.widths, config.filters_per_width, rng);
  const std::size_t c = sentence_encoder_.output_size();
  const std::size_t h2 = 2 * config.encoder_hidden;
  const std::size_t dh = config.decoder_hidden;
  article_encoder_ = BiLstm::create(params_, "sel/article_lstm", c, config.encoder_hidden, rng);
  decoder_ = LstmCell::create(params_, "sel/decoder", c, dh, rng);
  init_ = Linear::create(params_, "sel/init", h2, dh, rng);
  start_ = params_.add_uniform("sel/start", {c}, 0.1, rng);
  stop_key_ = params_.add_uniform("sel/stop_key", {h2}, 0.1, rng);
  we1_ = params_.add_xavier("sel/W_e1", {a, dh}, rng);
  we2_ = params_.add_xavier("sel/W_e2", {a, c}, rng);
  ve_ = params_.add_uniform("sel/v_e", {a}, 0.1, rng);
  wh1_ = params_.add_xavier("sel/W_h1", {a, dh}, rng);
  wh2_ = params_.add_xavier("sel/W_h2", {a, h2}, rng);
  vh_ = params_.add_uniform("sel/v_h", {a}, 0.1, rng);
  wp1_ = params_.add_xavier("sel/W_p1", {a, dh}, rng);
  wp2_ = params_.add_xavier("sel/W_p2", {a, a}, rng);
  wp3_ = params_.add_xavier("sel/W_p3", {a, c}, rng);
  wp4_ = params_.add_xavier("sel/W_p4", {a, h2}, rng);
  vq_ = params_.add_uniform("sel/v_q", {a}, 0.1, rng);
}

template <class Store>
EncodedArticle Selector::encode(Tape& tape, Store& store, const SelectorInput& input) const {
  if (input.sentences.empty()) throw std::invalid_argument("selector: empty article");
  Var table = bind(tape, store, embedding_);
  EncodedArticle enc;
  enc.sentences = input.sentences.size();
  enc.entities = input.entities.size();

  std::vector<Var> r;
  for (const auto& s : input.sentences) r.push_back(sentence_encoder_.encode(tape, store, embedding(table, vocab_.encode(s))));
  enc.sentence_reprs = stack(r);
  enc.article_states = article_encoder_.run(tape, store, r);

  if (enc.entities > 0) {
    std::vector<Var> e;
    for (const auto& s : input.entities) e.push_back(entity_encoder_.encode(tape, store, embedding(table, vocab_.encode(s))));
    enc.entity_reprs = stack(e);
    enc.entity_keys = matmul_transposed(enc.entity_reprs, bind(tape, store, we2_));
  }

  Var wh2 = bind(tape, store, wh2_);
  enc.glimpse_keys = matmul_transposed(enc.article_states, wh2);
  std::vector<Var> keys;
  for (std::size_t j = 0; j < enc.sentences; ++j) keys.push_back(row(enc.article_states, j));
  keys.push_back(bind(tape, store, stop_key_));
  enc.pointer_keys = matmul_transposed(stack(keys), bind(tape, store, wp4_));
  return enc;
}

template <class Store>
LstmState Selector::initial_state(Tape& tape, Store& store, const EncodedArticle& enc) const {
  Var h0 = tensor::tanh(init_(tape, store, mean_rows(enc.article_states)));
  return {h0, tape.constant(Tensor({config_.decoder_hidden}))};
}

template <class Store>
StepResult Selector::step(Tape& tape, Store& store, const EncodedArticle& enc, LstmState& state, int previous) const {
  Var x = previous < 0 ? bind(tape, store, start_) : row(enc.sentence_reprs, static_cast<std::size_t>(previous));
  state = decoder_.step(tape, store, x, state);
  Var s = state.h;
  StepResult out;

  if (enc.entities > 0) {
    Var q = matvec(bind(tape, store, we1_), s);
    out.entity_attention = softmax(matvec(tensor::tanh(add_rows(enc.entity_keys, q)), bind(tape, store, ve_)));
    out.entity_context = vecmat(out.entity_attention, enc.entity_reprs);
  } else {
    out.entity_context = tape.constant(Tensor({sentence_encoder_.output_size()}));
  }

  Var qh = matvec(bind(tape, store, wh1_), s);
  out.glimpse_attention = softmax(matvec(tensor::tanh(add_rows(enc.glimpse_keys, qh)), bind(tape, store, vh_)));
  Var glimpse = vecmat(out.glimpse_attention, enc.glimpse_keys);

  Var query = add(add(matvec(bind(tape, store, wp1_), s), matvec(bind(tape, store, wp2_), glimpse)),
                  matvec(bind(tape, store, wp3_), out.entity_context));
  out.logits = matvec(tensor::tanh(add_rows(enc.pointer_keys, query)), bind(tape, store, vq_));
  return out;
}

std::vector<bool> Selector::mask_for(std::size_t sentences, const std::vector<int>& picked) const {
  std::vector<bool> mask(sentences + 1, false);
  if (config_.mask_repeats)
    for (int i : picked) mask[static_cast<std::size_t>(i)] = true;
  return mask;
}

template <class Store>
Var Selector::sequence_nll(Tape& tape, Store& store, const SelectorInput& input, const std::vector<int>& labels,
                           bool include_stop) const {
  const std::size_t n = input.sentences.size();
  for (int l : labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= n) {
      throw std::out_of_range("selector: label " + std::to_string(l) + " outside article of " + std::to_string(n) +
                              " sentences");
    }
  }
  EncodedArticle enc = encode(tape, store, input);
  LstmState state = initial_state(tape, store, enc);
  std::vector<Var> terms;
  std::vector<int> picked;
  int previous = -1;
  auto score = [&](std::size_t target) {
    StepResult r = step(tape, store, enc, state, previous);
    terms.push_back(pick(log_softmax(r.logits, mask_for(n, picked)), target));
  };
  for (int l : labels) {
    score(static_cast<std::size_t>(l));
    picked.push_back(l);
    previous = l;
  }
  if (include_stop) score(n);
  if (terms.empty()) return tape.constant(Tensor::scalar(0.0));
  return scale(sum(concat(terms)), -1.0);
}

SelectorOutput Selector::run(const SelectorInput& input, Rng* rng, std::size_t max_steps) const {
  Tape tape(false);
  EncodedArticle enc = encode(tape, params_, input);
  LstmState state = initial_state(tape, params_, enc);
  const std::size_t n = input.sentences.size();
  SelectorOutput out;
  int previous = -1;
  for (std::size_t t = 0; t < max_steps; ++t) {
    StepResult r = step(tape, params_, enc, state, previous);
    Var p = softmax(r.logits, mask_for(n, out.indices));
    std::vector<double> dist(p.value().data().begin(), p.value().data().end());
    out.distributions.push_back(dist);
    std::size_t choice;
    if (rng) {
      choice = rng->categorical(dist);
    } else {
      choice = static_cast<std::size_t>(std::max_element(dist.begin(), dist.end()) - dist.begin());
    }
    if (choice == n) {
      out.stopped = true;
      break;
    }
    out.indices.push_back(static_cast<int>(choice));
    previous = static_cast<int>(choice);
  }
  return out;
}

SelectorOutput Selector::select(const SelectorInput& input, std::size_t max_steps) const {
  return run(input, nullptr, max_steps);
}

SelectorOutput Selector::sample(const SelectorInput& input, Rng& rng, std::size_t max_steps) const {
  return run(input, &rng, max_steps);
}

std::vector<double> Selector::first_step_distribution(const SelectorInput& input) const {
  auto out = run(input, nullptr, 1);
  return out.distributions.front();
}

void Selector::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  params_.save(dir / "params.bin");
  vocab_.save(dir / "vocab.txt");
  nlohmann::json j;
  j["embedding_dim"] = config_.embedding_dim;
  j["widths"] = config_.widths;
  j["filters_per_width"] = config_.filters_per_width;
  j["encoder_hidden"] = config_.encoder_hidden;
  j["decoder_hidden"] = config_.decoder_hidden;
  j["attention_dim"] = config_.attention_dim;
  j["salient_k"] = config_.salient_k;
  j["mask_repeats"] = config_.mask_repeats;
  std::ofstream(dir / "config.json") << j.dump(2) << '\n';
}

Selector Selector::load(const std::filesystem::path& dir) {
  std::ifstream in(dir / "config.json");
  if (!in) throw std::runtime_error("selector: missing " + (dir / "config.json").string());
  auto j = nlohmann::json::parse(in);
  SelectorConfig cfg;
  cfg.embedding_dim = j.at("embedding_dim").get<std::size_t>();
  cfg.widths = j.at("widths").get<std::vector<std::size_t>>();
  cfg.filters_per_width = j.at("filters_per_width").get<std::size_t>();
  cfg.encoder_hidden = j.at("encoder_hidden").get<std::size_t>();
  cfg.decoder_hidden = j.at("decoder_hidden").get<std::size_t>();
  cfg.attention_dim = j.at("attention_dim").get<std::size_t>();
  cfg.salient_k = j.at("salient_k").get<std::size_t>();
  cfg.mask_repeats = j.at("mask_repeats").get<bool>();
  Rng rng(0);
  Selector s(text::Vocabulary::load(dir / "vocab.txt"), cfg, rng);
  s.params_.assign_from(ParameterStore::load(dir / "params.bin"));
  return s;
}

TrainReport train_selector(Selector& selector, const std::vector<SelectorInput>& inputs,
                           const std::vector<oracle::SelectionLabel>& labels, const TrainOptions& options) {
  if (inputs.size() != labels.size()) throw std::invalid_argument("train_selector: inputs and labels differ in size");
  if (inputs.empty()) throw std::invalid_argument("train_selector: empty corpus");
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    for (int l : labels[i].indices) {
      if (l < 0 || static_cast<std::size_t>(l) >= inputs[i].sentences.size()) {
        throw std::out_of_range("train_selector: label " + std::to_string(l) + " outside article '" +
                                labels[i].article_id + "'");
      }
    }
  }
  Adam adam({options.lr, options.clip_norm});
  Rng rng(options.seed);
  auto& store = selector.params();
  std::vector<std::size_t> order(inputs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const std::size_t batch = std::max<std::size_t>(1, options.batch_size);
  TrainReport report;
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    rng.shuffle(order);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      std::size_t end = std::min(order.size(), start + batch);
      store.zero_grad();
      Tape tape;
      std::vector<Var> losses;
      for (std::size_t i = start; i < end; ++i) {
        losses.push_back(selector.sequence_nll(tape, store, inputs[order[i]], labels[order[i]].indices));
      }
      Var loss = scale(sum(concat(losses)), 1.0 / static_cast<double>(end - start));
      total += loss.item() * static_cast<double>(end - start);
      tape.backward(loss);
      auto step = adam.step(store);
      report.max_clipped_norm = std::max(report.max_clipped_norm, step.clipped_norm);
    }
    report.epoch_loss.push_back(total / static_cast<double>(inputs.size()));
  }
  return report;
}

template EncodedArticle Selector::encode(Tape&, ParameterStore&, const SelectorInput&) const;
template EncodedArticle Selector::encode(Tape&, const ParameterStore&, const SelectorInput&) const;
template LstmState Selector::initial_state(Tape&, ParameterStore&, const EncodedArticle&) const;
template LstmState Selector::initial_state(Tape&, const ParameterStore&, const EncodedArticle&) const;
template StepResult Selector::step(Tape&, ParameterStore&, const EncodedArticle&, LstmState&, int) const;
template StepResult Selector::step(Tape&, const ParameterStore&, const EncodedArticle&, LstmState&, int) const;
template Var Selector::sequence_nll(Tape&, ParameterStore&, const SelectorInput&, const std::vector<int>&, bool) const;
template Var Selector::sequence_nll(Tape&, const ParameterStore&, const SelectorInput&, const std::vector<int>&,
                                    bool) const;

}  // namespace seneca::selector
