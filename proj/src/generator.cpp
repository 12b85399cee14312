#include "seneca/generator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "json.hpp"
#include "seneca/coherence.hpp"
#include "seneca/rouge.hpp"

namespace seneca::generator {

using namespace seneca::tensor;
using text::Vocabulary;

ExtractedInput make_input(std::string article_id, const Sentence& tokens, const Vocabulary& vocab) {
  ExtractedInput in;
  in.article_id = std::move(article_id);
  in.tokens = tokens;
  const int v = static_cast<int>(vocab.size());
  for (const auto& t : tokens) {
    if (vocab.contains(t)) {
      int id = vocab.id(t);
      in.ids.push_back(id);
      in.ext_ids.push_back(id);
      continue;
    }
    in.ids.push_back(Vocabulary::kUnkId);
    auto it = std::find(in.oov.begin(), in.oov.end(), t);
    if (it == in.oov.end()) {
      in.oov.push_back(t);
      it = in.oov.end() - 1;
    }
    in.ext_ids.push_back(v + static_cast<int>(it - in.oov.begin()));
  }
  return in;
}

ExtractedInput make_input(const text::Article& article, const std::vector<int>& indices, const Vocabulary& vocab) {
  Sentence tokens;
  for (int i : indices) {
    if (i < 0 || static_cast<std::size_t>(i) >= article.sentences.size()) {
      throw std::out_of_range("make_input: sentence " + std::to_string(i) + " outside article '" + article.id + "'");
    }
    const auto& s = article.sentences[static_cast<std::size_t>(i)];
    tokens.insert(tokens.end(), s.begin(), s.end());
  }
  return make_input(article.id, tokens, vocab);
}

bool repeats_trigram(const std::vector<int>& ids, int next) {
  const std::size_t n = ids.size();
  if (n < 2) return false;
  const int a = ids[n - 2], b = ids[n - 1];
  for (std::size_t i = 0; i + 2 < n; ++i) {
    if (ids[i] == a && ids[i + 1] == b && ids[i + 2] == next) return true;
  }
  return false;
}

Generator::Generator(Vocabulary vocab, const GeneratorConfig& config, Rng& rng)
    : vocab_(std::move(vocab)), config_(config) {
  const std::size_t d = config.embedding_dim;
  const std::size_t h2 = 2 * config.encoder_hidden;
  const std::size_t dh = config.decoder_hidden;
  embedding_ = params_.add_uniform("gen/embedding", {vocab_.size(), d}, 0.1, rng);
  encoder_ = BiLstm::create(params_, "gen/encoder", d, config.encoder_hidden, rng);
  init_ = Linear::create(params_, "gen/init", h2, dh, rng);
  key_proj_ = params_.add_xavier("gen/attn_keys", {config.attention_dim, h2}, rng);
  attention_ = AdditiveAttention::create(params_, "gen/attn", dh, config.attention_dim, rng);
  decoder_ = LstmCell::create(params_, "gen/decoder", d + h2, dh, rng);
  vocab_out_ = Linear::create(params_, "gen/vocab_out", dh + h2, vocab_.size(), rng);
  gate_ = Linear::create(params_, "gen/p_gen", h2 + dh + d, 1, rng);
  updates_ = params_.add("meta/updates", Tensor::scalar(0.0), false);
}

std::uint64_t Generator::updates() const {
  return static_cast<std::uint64_t>(params_.at(updates_).value.item());
}

void Generator::count_update() { params_.at(updates_).value.data()[0] += 1.0; }

template <class Store>
EncodedInput Generator::encode(Tape& tape, Store& store, const ExtractedInput& input) const {
  if (input.ids.empty()) throw std::invalid_argument("generator: empty input for '" + input.article_id + "'");
  Var tokens = embedding(bind(tape, store, embedding_), input.ids);
  std::vector<Var> xs;
  xs.reserve(input.ids.size());
  for (std::size_t i = 0; i < input.ids.size(); ++i) xs.push_back(row(tokens, i));
  LstmState fwd, bwd;
  EncodedInput enc;
  enc.states = encoder_.run(tape, store, xs, &fwd, &bwd);
  enc.keys = matmul_transposed(enc.states, bind(tape, store, key_proj_));
  enc.initial.lstm = {tensor::tanh(init_(tape, store, concat({fwd.h, bwd.h}))),
                      tape.constant(Tensor({config_.decoder_hidden}))};
  enc.initial.context = tape.constant(Tensor({2 * config_.encoder_hidden}));
  return enc;
}

template <class Store>
StepOutput Generator::step(Tape& tape, Store& store, const ExtractedInput& input, const EncodedInput& enc,
                           DecoderState& state, int previous, std::optional<double> force_p_gen) const {
  const std::size_t v = vocab_.size();
  int in_vocab = previous >= 0 && static_cast<std::size_t>(previous) < v ? previous : Vocabulary::kUnkId;
  const int ids[1] = {in_vocab};
  Var x = row(embedding(bind(tape, store, embedding_), ids), 0);
  state.lstm = decoder_.step(tape, store, concat({x, state.context}), state.lstm);
  Var s = state.lstm.h;

  StepOutput out;
  out.attention = softmax(attention_.scores(tape, store, enc.keys, s));
  Var context = vecmat(out.attention, enc.states);
  state.context = context;
  Var p_vocab = softmax(vocab_out_(tape, store, concat({s, context})));
  out.p_gen = force_p_gen ? tape.constant(Tensor::vector({*force_p_gen}))
                          : sigmoid(gate_(tape, store, concat({context, s, x})));

  const std::size_t extended = v + input.oov.size();
  if (extended > v) p_vocab = concat({p_vocab, tape.constant(Tensor({extended - v}))});
  Var copy = scatter_add(out.attention, input.ext_ids, extended);
  out.distribution = add(scale_by(p_vocab, out.p_gen), scale_by(copy, one_minus(out.p_gen)));
  return out;
}

std::vector<int> Generator::target_ids(const ExtractedInput& input, const Sentence& reference) const {
  std::vector<int> out;
  out.reserve(reference.size() + 1);
  const int v = static_cast<int>(vocab_.size());
  for (const auto& t : reference) {
    if (vocab_.contains(t)) {
      out.push_back(vocab_.id(t));
      continue;
    }
    auto it = std::find(input.oov.begin(), input.oov.end(), t);
    out.push_back(it == input.oov.end() ? Vocabulary::kUnkId : v + static_cast<int>(it - input.oov.begin()));
  }
  out.push_back(Vocabulary::kStopId);
  return out;
}

template <class Store>
Var Generator::sequence_log_prob(Tape& tape, Store& store, const ExtractedInput& input, const EncodedInput& enc,
                                 const std::vector<int>& targets) const {
  DecoderState state = enc.initial;
  int previous = Vocabulary::kStartId;
  std::vector<Var> terms;
  terms.reserve(targets.size());
  for (int y : targets) {
    StepOutput o = step(tape, store, input, enc, state, previous);
    terms.push_back(tensor::log(pick(o.distribution, static_cast<std::size_t>(y))));
    previous = y;
  }
  if (terms.empty()) return tape.constant(Tensor::scalar(0.0));
  return sum(concat(terms));
}

std::string Generator::token_of(const ExtractedInput& input, int ext_id) const {
  const int v = static_cast<int>(vocab_.size());
  if (ext_id < v) return vocab_.token(ext_id);
  std::size_t k = static_cast<std::size_t>(ext_id - v);
  if (k >= input.oov.size()) throw std::out_of_range("generator: extended id " + std::to_string(ext_id));
  return input.oov[k];
}

namespace {

double length_normalized(double log_prob, std::size_t length, double alpha) {
  return log_prob / std::pow(static_cast<double>(std::max<std::size_t>(1, length)), alpha);
}

}  // namespace

DecodedSummary Generator::greedy_decode(const ExtractedInput& input, const DecodeOptions& options) const {
  Tape tape(false);
  EncodedInput enc = encode(tape, params_, input);
  DecoderState state = enc.initial;
  DecodedSummary out;
  out.mode = DecodeMode::greedy;
  int previous = Vocabulary::kStartId;
  double total = 0.0;
  for (std::size_t t = 0; t < options.max_len; ++t) {
    auto dist = step(tape, params_, input, enc, state, previous).distribution.value().data();
    int best = -1;
    for (std::size_t i = 0; i < dist.size(); ++i) {
      int id = static_cast<int>(i);
      if (id != Vocabulary::kStopId && options.block_trigrams && repeats_trigram(out.ids, id)) continue;
      if (best < 0 || dist[i] > dist[static_cast<std::size_t>(best)]) best = id;
    }
    double lp = std::log(dist[static_cast<std::size_t>(best)]);
    out.log_probs.push_back(lp);
    total += lp;
    if (best == Vocabulary::kStopId) break;
    out.ids.push_back(best);
    out.tokens.push_back(token_of(input, best));
    previous = best;
  }
  out.score = length_normalized(total, out.log_probs.size(), options.alpha);
  return out;
}

DecodedSummary Generator::beam_decode(const ExtractedInput& input, const DecodeOptions& options) const {
  if (options.beam == 0) throw std::invalid_argument("beam_decode: beam width must be positive");
  struct Hyp {
    std::vector<int> ids;
    std::vector<double> log_probs;
    double total = 0.0;
    DecoderState state;
  };
  struct Candidate {
    std::size_t hyp;
    int token;
    double total;
    double lp;
  };
  Tape tape(false);
  EncodedInput enc = encode(tape, params_, input);
  std::vector<Hyp> alive{{{}, {}, 0.0, enc.initial}};
  std::vector<Hyp> finished;
  for (std::size_t t = 0; t < options.max_len && !alive.empty() && finished.size() < options.beam; ++t) {
    std::vector<Candidate> cands;
    std::vector<DecoderState> states(alive.size());
    for (std::size_t h = 0; h < alive.size(); ++h) {
      Hyp& hyp = alive[h];
      states[h] = hyp.state;
      int previous = hyp.ids.empty() ? Vocabulary::kStartId : hyp.ids.back();
      auto dist = step(tape, params_, input, enc, states[h], previous).distribution.value().data();
      for (std::size_t i = 0; i < dist.size(); ++i) {
        int id = static_cast<int>(i);
        if (dist[i] <= 0.0) continue;
        if (id != Vocabulary::kStopId && options.block_trigrams && repeats_trigram(hyp.ids, id)) continue;
        double lp = std::log(dist[i]);
        cands.push_back({h, id, hyp.total + lp, lp});
      }
    }
    std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
      if (a.total != b.total) return a.total > b.total;
      if (a.hyp != b.hyp) return a.hyp < b.hyp;
      return a.token < b.token;
    });
    std::vector<Hyp> next;
    for (const auto& c : cands) {
      if (next.size() >= options.beam) break;
      Hyp h{alive[c.hyp].ids, alive[c.hyp].log_probs, c.total, states[c.hyp]};
      h.log_probs.push_back(c.lp);
      if (c.token == Vocabulary::kStopId) {
        if (finished.size() < options.beam) finished.push_back(std::move(h));
      } else {
        h.ids.push_back(c.token);
        next.push_back(std::move(h));
      }
    }
    alive = std::move(next);
  }
  if (finished.empty()) finished = std::move(alive);
  if (finished.empty()) throw std::logic_error("beam_decode: no hypothesis survived");
  std::size_t best = 0;
  auto score = [&](const Hyp& h) { return length_normalized(h.total, h.log_probs.size(), options.alpha); };
  for (std::size_t i = 1; i < finished.size(); ++i)
    if (score(finished[i]) > score(finished[best])) best = i;
  DecodedSummary out;
  out.mode = DecodeMode::beam;
  out.ids = finished[best].ids;
  out.log_probs = finished[best].log_probs;
  out.score = score(finished[best]);
  for (int id : out.ids) out.tokens.push_back(token_of(input, id));
  return out;
}

namespace {

std::size_t draw(std::span<const double> dist, Rng& rng, double temperature) {
  if (temperature <= 0.0) return static_cast<std::size_t>(std::max_element(dist.begin(), dist.end()) - dist.begin());
  if (temperature == 1.0) return rng.categorical(dist);
  std::vector<double> w(dist.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = dist[i] > 0.0 ? std::pow(dist[i], 1.0 / temperature) : 0.0;
  return rng.categorical(w);
}

}  // namespace

DecodedSummary Generator::sample_decode(const ExtractedInput& input, Rng& rng, std::size_t max_len,
                                        double temperature) const {
  Tape tape(false);
  EncodedInput enc = encode(tape, params_, input);
  DecoderState state = enc.initial;
  DecodedSummary out;
  out.mode = DecodeMode::sampled;
  int previous = Vocabulary::kStartId;
  double total = 0.0;
  for (std::size_t t = 0; t < max_len; ++t) {
    auto dist = step(tape, params_, input, enc, state, previous).distribution.value().data();
    int tok = static_cast<int>(draw(dist, rng, temperature));
    double lp = std::log(dist[static_cast<std::size_t>(tok)]);
    out.log_probs.push_back(lp);
    total += lp;
    if (tok == Vocabulary::kStopId) break;
    out.ids.push_back(tok);
    out.tokens.push_back(token_of(input, tok));
    previous = tok;
  }
  out.score = total;
  return out;
}

void Generator::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  params_.save(dir / "params.bin");
  vocab_.save(dir / "vocab.txt");
  nlohmann::json j;
  j["embedding_dim"] = config_.embedding_dim;
  j["encoder_hidden"] = config_.encoder_hidden;
  j["decoder_hidden"] = config_.decoder_hidden;
  j["attention_dim"] = config_.attention_dim;
  std::ofstream(dir / "config.json") << j.dump(2) << '\n';
}

Generator Generator::load(const std::filesystem::path& dir) {
  std::ifstream in(dir / "config.json");
  if (!in) throw std::runtime_error("generator: missing " + (dir / "config.json").string());
  auto j = nlohmann::json::parse(in);
  GeneratorConfig cfg;
  cfg.embedding_dim = j.at("embedding_dim").get<std::size_t>();
  cfg.encoder_hidden = j.at("encoder_hidden").get<std::size_t>();
  cfg.decoder_hidden = j.at("decoder_hidden").get<std::size_t>();
  cfg.attention_dim = j.at("attention_dim").get<std::size_t>();
  Rng rng(0);
  Generator g(Vocabulary::load(dir / "vocab.txt"), cfg, rng);
  g.params_.assign_from(ParameterStore::load(dir / "params.bin"));
  return g;
}

MlReport train_ml(Generator& generator, const std::vector<MlExample>& examples, const MlOptions& options) {
  MlReport report;
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (examples[i].reference.empty() || examples[i].input.ids.empty()) {
      ++report.skipped;
    } else {
      order.push_back(i);
    }
  }
  if (order.empty()) throw std::invalid_argument("train_ml: no example with a non-empty input and reference");
  std::vector<std::vector<int>> targets(examples.size());
  for (std::size_t i : order) targets[i] = generator.target_ids(examples[i].input, examples[i].reference);

  Adam adam({options.lr, options.clip_norm});
  Rng rng(options.seed);
  auto& store = generator.params();
  const std::size_t batch = std::max<std::size_t>(1, options.batch_size);
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    rng.shuffle(order);
    double total = 0.0;
    std::size_t tokens = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      std::size_t end = std::min(order.size(), start + batch);
      store.zero_grad();
      Tape tape;
      std::vector<Var> lps;
      std::size_t count = 0;
      for (std::size_t i = start; i < end; ++i) {
        const auto& ex = examples[order[i]];
        EncodedInput enc = generator.encode(tape, store, ex.input);
        lps.push_back(generator.sequence_log_prob(tape, store, ex.input, enc, targets[order[i]]));
        count += targets[order[i]].size();
      }
      Var loss = scale(sum(concat(lps)), -1.0 / static_cast<double>(count));
      total += loss.item() * static_cast<double>(count);
      tokens += count;
      tape.backward(loss);
      adam.step(store);
      generator.count_update();
    }
    report.epoch_loss.push_back(total / static_cast<double>(tokens));
  }
  return report;
}

RewardFn make_reward_fn(const rewards::RewardConfig& config, const coherence::CoherenceModel* coherence) {
  if (config.use_coh && coherence == nullptr) {
    throw std::invalid_argument("make_reward_fn: coherence reward enabled without a coherence model");
  }
  return [config, coherence](const Sentence& summary, const std::vector<Sentence>& reference) {
    rewards::RewardBreakdown r;
    r.r_rouge = metrics::rouge_reward(summary, text::flatten(reference));
    auto sentences = coherence::split_sentences(summary);
    if (config.use_coh) r.r_coh = coherence::summary_coherence(*coherence, sentences);
    if (config.use_ref) r.r_ref = rewards::referential_clarity_reward(sentences);
    if (config.use_app) r.r_app = rewards::apposition_reward(sentences);
    return rewards::mix_reward(r, config);
  };
}

SelfCriticalTrainer::SelfCriticalTrainer(Generator& generator, RewardFn reward, RlOptions options,
                                         std::uint64_t seed)
    : generator_(generator),
      reward_(std::move(reward)),
      options_(options),
      adam_({options.lr, options.clip_norm}),
      rng_(seed) {
  if (options_.samples_per_item == 0) throw std::invalid_argument("self-critical: need at least one sample per item");
}

RlStepReport SelfCriticalTrainer::step(const std::vector<RlExample>& batch) {
  if (batch.empty()) throw std::invalid_argument("self-critical: empty batch");
  auto& store = generator_.params();
  store.zero_grad();
  Tape tape;
  std::vector<Var> terms;
  RlStepReport report;
  bool any = false;
  std::size_t n = 0;
  for (const auto& ex : batch) {
    DecodedSummary greedy = generator_.sample_decode(ex.input, rng_, options_.max_len, 0.0);
    double baseline = reward_(greedy.tokens, ex.reference).total;
    EncodedInput enc = generator_.encode(tape, store, ex.input);
    for (std::size_t k = 0; k < options_.samples_per_item; ++k) {
      DecoderState state = enc.initial;
      int previous = Vocabulary::kStartId;
      std::vector<Var> lps;
      Sentence tokens;
      for (std::size_t t = 0; t < options_.max_len; ++t) {
        StepOutput o = generator_.step(tape, store, ex.input, enc, state, previous);
        std::size_t tok = draw(o.distribution.value().data(), rng_, options_.temperature);
        lps.push_back(tensor::log(pick(o.distribution, tok)));
        if (static_cast<int>(tok) == Vocabulary::kStopId) break;
        tokens.push_back(generator_.token_of(ex.input, static_cast<int>(tok)));
        previous = static_cast<int>(tok);
      }
      double r = reward_(tokens, ex.reference).total;
      double advantage = r - baseline;
      report.mean_sample_reward += r;
      report.mean_baseline_reward += baseline;
      ++n;
      if (advantage != 0.0) {
        any = true;
        terms.push_back(scale(sum(concat(lps)), advantage));
      }
    }
  }
  report.mean_sample_reward /= static_cast<double>(n);
  report.mean_baseline_reward /= static_cast<double>(n);
  if (!any) return report;
  Var loss = scale(sum(concat(terms)), -1.0 / static_cast<double>(n));
  report.loss = loss.item();
  tape.backward(loss);
  adam_.step(store);
  generator_.count_update();
  report.updated = true;
  return report;
}

template EncodedInput Generator::encode(Tape&, ParameterStore&, const ExtractedInput&) const;
template EncodedInput Generator::encode(Tape&, const ParameterStore&, const ExtractedInput&) const;
template StepOutput Generator::step(Tape&, ParameterStore&, const ExtractedInput&, const EncodedInput&, DecoderState&, int,
                                    std::optional<double>) const;
template StepOutput Generator::step(Tape&, const ParameterStore&, const ExtractedInput&, const EncodedInput&,
                                    DecoderState&, int, std::optional<double>) const;
template Var Generator::sequence_log_prob(Tape&, ParameterStore&, const ExtractedInput&, const EncodedInput&,
                                          const std::vector<int>&) const;
template Var Generator::sequence_log_prob(Tape&, const ParameterStore&, const ExtractedInput&, const EncodedInput&,
                                          const std::vector<int>&) const;

}  // namespace seneca::generator
