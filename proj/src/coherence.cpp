#include "seneca/coherence.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

#include "json.hpp"

namespace seneca::coherence {

using tensor::Tape;
using tensor::Var;

namespace {

bool shares_cluster(const std::vector<std::set<int>>& per_sentence, std::size_t i, std::size_t j) {
  for (int c : per_sentence[i])
    if (per_sentence[j].count(c)) return true;
  return false;
}

const char* provenance_name(Provenance p) {
  return p == Provenance::adjacent_entity ? "adjacent_entity" : "self_repetition";
}

bool is_content(const std::string& t, const text::Lexicons& lex) {
  if (t == "0" || lex.is_determiner(t) || lex.is_function_word(t) || lex.is_pronoun(t)) return false;
  return std::any_of(t.begin(), t.end(), [](unsigned char c) { return std::isalpha(c) || c >= 0x80; });
}

bool content_overlap(const Sentence& a, const Sentence& b, const text::Lexicons& lex) {
  std::set<std::string> seen;
  for (const auto& t : a)
    if (is_content(t, lex)) seen.insert(t);
  return std::any_of(b.begin(), b.end(), [&](const std::string& t) { return seen.count(t) > 0; });
}

}  // namespace

std::vector<CoherenceTriple> build_coherence_triples(const text::Article& article,
                                                     const std::vector<text::MentionCluster>& clusters, Rng& rng,
                                                     const TripleOptions& options) {
  const auto& sents = article.sentences;
  auto per_sentence = text::clusters_per_sentence(clusters, sents.size());
  std::vector<CoherenceTriple> out;
  std::size_t positives = 0;
  const double f = options.self_repetition_fraction;
  for (std::size_t i = 0; i + 1 < sents.size(); ++i) {
    if (!shares_cluster(per_sentence, i, i + 1)) continue;
    std::vector<std::size_t> candidates;
    std::size_t lo = i >= options.max_negative_distance ? i - options.max_negative_distance : 0;
    std::size_t hi = std::min(sents.size() - 1, i + options.max_negative_distance);
    for (std::size_t j = lo; j <= hi; ++j) {
      if (j != i && !shares_cluster(per_sentence, i, j)) candidates.push_back(j);
    }
    if (!candidates.empty()) {
      out.push_back({sents[i], sents[i + 1], sents[candidates[rng.index(candidates.size())]],
                     Provenance::adjacent_entity});
    }
    const double k = static_cast<double>(positives);
    if (std::ceil((k + 1) * f) > std::ceil(k * f)) {
      out.push_back({sents[i], sents[i + 1], sents[i], Provenance::self_repetition});
    }
    ++positives;
  }
  return out;
}

std::vector<CoherenceTriple> build_coherence_triples(const std::vector<text::Article>& corpus, Rng& rng,
                                                     const TripleOptions& options, const text::Lexicons& lex) {
  std::vector<CoherenceTriple> out;
  for (const auto& a : corpus) {
    auto part = build_coherence_triples(a, text::extract_mention_clusters(a, lex), rng, options);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

void write_triples(std::ostream& out, const std::vector<CoherenceTriple>& triples) {
  for (const auto& t : triples) {
    nlohmann::json j;
    j["target"] = text::join(t.target);
    j["positive"] = text::join(t.positive);
    j["negative"] = text::join(t.negative);
    j["provenance"] = provenance_name(t.provenance);
    out << j.dump() << '\n';
  }
}

std::vector<CoherenceTriple> read_triples(std::istream& in) {
  std::vector<CoherenceTriple> out;
  std::string line;
  std::size_t lineno = 0;
  auto split = [](const std::string& s) {
    Sentence toks;
    std::size_t start = 0;
    while (start < s.size()) {
      auto end = s.find(' ', start);
      if (end == std::string::npos) end = s.size();
      if (end > start) toks.push_back(s.substr(start, end - start));
      start = end + 1;
    }
    return toks;
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      auto prov = j.at("provenance").get<std::string>();
      if (prov != "adjacent_entity" && prov != "self_repetition") {
        throw std::runtime_error("triples line " + std::to_string(lineno) + ": unknown provenance " + prov);
      }
      out.push_back({split(j.at("target").get<std::string>()), split(j.at("positive").get<std::string>()),
                     split(j.at("negative").get<std::string>()),
                     prov == "adjacent_entity" ? Provenance::adjacent_entity : Provenance::self_repetition});
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("triples line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

CoherenceModel::CoherenceModel(text::Vocabulary vocab, const ModelConfig& config, Rng& rng)
    : vocab_(std::move(vocab)), config_(config) {
  embedding_ = params_.add_uniform("coh/embedding", {vocab_.size(), config.embedding_dim}, 0.1, rng);
  encoder_ = tensor::ConvEncoder::create(params_, "coh/conv", config.embedding_dim, config.widths,
                                         config.filters_per_width, rng);
  hidden_ = tensor::Linear::create(params_, "coh/mlp1", 3 * encoder_.output_size(), config.hidden, rng);
  out_ = tensor::Linear::create(params_, "coh/mlp2", config.hidden, 1, rng);
}

double CoherenceModel::score(const Sentence& a, const Sentence& b) const {
  Tape tape(false);
  return score(tape, params_, a, b).item();
}

void CoherenceModel::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  params_.save(dir / "params.bin");
  vocab_.save(dir / "vocab.txt");
  nlohmann::json j;
  j["embedding_dim"] = config_.embedding_dim;
  j["widths"] = config_.widths;
  j["filters_per_width"] = config_.filters_per_width;
  j["hidden"] = config_.hidden;
  std::ofstream(dir / "config.json") << j.dump(2) << '\n';
}

CoherenceModel CoherenceModel::load(const std::filesystem::path& dir) {
  std::ifstream in(dir / "config.json");
  if (!in) throw std::runtime_error("coherence model: missing " + (dir / "config.json").string());
  auto j = nlohmann::json::parse(in);
  ModelConfig cfg;
  cfg.embedding_dim = j.at("embedding_dim").get<std::size_t>();
  cfg.widths = j.at("widths").get<std::vector<std::size_t>>();
  cfg.filters_per_width = j.at("filters_per_width").get<std::size_t>();
  cfg.hidden = j.at("hidden").get<std::size_t>();
  Rng rng(0);
  CoherenceModel model(text::Vocabulary::load(dir / "vocab.txt"), cfg, rng);
  model.params_.assign_from(tensor::ParameterStore::load(dir / "params.bin"));
  return model;
}

Var hinge_loss(Tape& tape, const CoherenceModel& model, tensor::ParameterStore& store, const CoherenceTriple& t) {
  Var pos = model.score(tape, store, t.target, t.positive);
  Var neg = model.score(tape, store, t.target, t.negative);
  return tensor::relu(tensor::add_scalar(tensor::sub(neg, pos), 1.0));
}

double hinge_loss(const CoherenceModel& model, const CoherenceTriple& t) {
  return std::max(0.0, 1.0 - model.score(t.target, t.positive) + model.score(t.target, t.negative));
}

TrainReport train_coherence(CoherenceModel& model, const std::vector<CoherenceTriple>& triples,
                            const TrainOptions& options) {
  if (triples.empty()) throw std::invalid_argument("train_coherence: no triples");
  tensor::Adam adam({options.lr, options.clip_norm});
  Rng rng(options.seed);
  auto& store = model.params();
  std::vector<std::size_t> order(triples.size());
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
      for (std::size_t i = start; i < end; ++i) losses.push_back(hinge_loss(tape, model, store, triples[order[i]]));
      Var loss = tensor::scale(tensor::sum(tensor::concat(losses)), 1.0 / static_cast<double>(end - start));
      total += loss.item() * static_cast<double>(end - start);
      if (loss.item() > 0.0) {
        tape.backward(loss);
        adam.step(store);
      }
    }
    report.epoch_loss.push_back(total / static_cast<double>(triples.size()));
    report.epoch_accuracy.push_back(pairwise_accuracy(model, triples));
  }
  return report;
}

double summary_coherence(const CoherenceModel& model, const std::vector<Sentence>& summary) {
  if (summary.size() < 2) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < summary.size(); ++i) total += model.score(summary[i], summary[i + 1]);
  return total / static_cast<double>(summary.size() - 1);
}

std::vector<std::size_t> random_derangement(std::size_t n, Rng& rng) {
  if (n < 2) throw std::invalid_argument("random_derangement: need at least two items");
  std::vector<std::size_t> p(n);
  while (true) {
    for (std::size_t i = 0; i < n; ++i) p[i] = i;
    rng.shuffle(p);
    bool fixed = false;
    for (std::size_t i = 0; i < n && !fixed; ++i) fixed = p[i] == i;
    if (!fixed) return p;
  }
}

DiagnosticSets build_diagnostic_sets(const std::vector<text::Article>& corpus, Rng& rng, const text::Lexicons& lex) {
  DiagnosticSets sets;
  TripleOptions adjacent_only;
  adjacent_only.self_repetition_fraction = 0.0;
  for (const auto& a : corpus) {
    auto clusters = text::extract_mention_clusters(a, lex);
    auto triples = build_coherence_triples(a, clusters, rng, adjacent_only);
    sets.pairwise.insert(sets.pairwise.end(), triples.begin(), triples.end());

    if (a.summary.size() >= 2) {
      auto perm = random_derangement(a.summary.size(), rng);
      ShuffleItem item{a.summary, {}};
      for (std::size_t i : perm) item.shuffled.push_back(a.summary[i]);
      sets.shuffle.push_back(std::move(item));
    }

    auto per_sentence = text::clusters_per_sentence(clusters, a.sentences.size());
    for (std::size_t i = 0; i + 1 < a.sentences.size(); ++i) {
      if (!shares_cluster(per_sentence, i, i + 1)) continue;
      std::vector<std::size_t> candidates;
      for (std::size_t j = 0; j < a.sentences.size(); ++j) {
        if (j != i && j != i + 1 && !content_overlap(a.sentences[i], a.sentences[j], lex)) candidates.push_back(j);
      }
      if (candidates.empty()) continue;
      sets.overlap.push_back({a.sentences[i], a.sentences[i + 1], a.sentences[candidates[rng.index(candidates.size())]]});
    }
  }
  return sets;
}

double pairwise_accuracy(const CoherenceModel& model, const std::vector<CoherenceTriple>& items) {
  if (items.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& t : items) hits += model.score(t.target, t.positive) > model.score(t.target, t.negative);
  return static_cast<double>(hits) / static_cast<double>(items.size());
}

double shuffle_accuracy(const CoherenceModel& model, const std::vector<ShuffleItem>& items) {
  if (items.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& it : items) hits += summary_coherence(model, it.original) > summary_coherence(model, it.shuffled);
  return static_cast<double>(hits) / static_cast<double>(items.size());
}

double overlap_accuracy(const CoherenceModel& model, const std::vector<OverlapItem>& items) {
  if (items.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& it : items) hits += model.score(it.target, it.positive) > model.score(it.target, it.negative);
  return static_cast<double>(hits) / static_cast<double>(items.size());
}

std::vector<Sentence> split_sentences(const Sentence& tokens) {
  std::vector<Sentence> out;
  Sentence cur;
  for (const auto& t : tokens) {
    cur.push_back(t);
    if (t == ".") {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

}  // namespace seneca::coherence
