#include "seneca/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>

#include "seneca/rouge.hpp"

namespace seneca::pipeline {

using namespace seneca::tensor;

ConnectReport connect_rl(selector::Selector& selector, const generator::Generator& generator,
                         const std::vector<text::Article>& corpus, const ConnectOptions& options) {
  if (generator.updates() == 0) {
    throw std::invalid_argument("connect_rl: generator checkpoint is untrained (no recorded updates)");
  }
  std::vector<const text::Article*> articles;
  for (const auto& a : corpus)
    if (!a.sentences.empty() && !a.summary.empty()) articles.push_back(&a);
  if (articles.empty()) throw std::invalid_argument("connect_rl: no article with both text and a reference");
  if (options.samples == 0 || options.batch_size == 0) {
    throw std::invalid_argument("connect_rl: batch size and samples must be positive");
  }

  std::vector<selector::SelectorInput> inputs;
  for (const auto* a : articles) inputs.push_back(selector::prepare_input(*a, selector.config().salient_k));
  generator::DecodeOptions decode;
  decode.max_len = options.max_len;
  auto reward = [&](const text::Article& a, std::vector<int> indices) {
    if (indices.empty()) indices = {0};
    auto summary = generator.greedy_decode(generator::make_input(a, indices, generator.vocab()), decode);
    return metrics::rouge_n(1, summary.tokens, text::flatten(a.summary)).f1;
  };

  Adam adam({options.lr, options.clip_norm});
  Rng rng(options.seed);
  std::vector<std::size_t> order(articles.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  std::size_t cursor = 0;
  auto& store = selector.params();
  ConnectReport report;
  for (std::size_t step = 0; step < options.steps; ++step) {
    store.zero_grad();
    Tape tape;
    std::vector<Var> terms;
    double advantage_sum = 0.0, reward_sum = 0.0;
    std::size_t n = 0;
    for (std::size_t b = 0; b < std::min(options.batch_size, articles.size()); ++b) {
      if (cursor == order.size()) {
        rng.shuffle(order);
        cursor = 0;
      }
      std::size_t i = order[cursor++];
      const auto& article = *articles[i];
      double baseline = reward(article, selector.select(inputs[i], options.max_select).indices);
      for (std::size_t s = 0; s < options.samples; ++s) {
        auto sampled = selector.sample(inputs[i], rng, options.max_select);
        double r = reward(article, sampled.indices);
        double advantage = r - baseline;
        reward_sum += r;
        advantage_sum += advantage;
        ++n;
        if (advantage != 0.0) {
          // -A log p(sample) == A * nll(sample)
          terms.push_back(scale(selector.sequence_nll(tape, store, inputs[i], sampled.indices, sampled.stopped),
                                advantage));
        }
      }
    }
    report.mean_advantage.push_back(advantage_sum / static_cast<double>(n));
    report.mean_reward.push_back(reward_sum / static_cast<double>(n));
    if (terms.empty()) continue;
    Var loss = scale(sum(concat(terms)), 1.0 / static_cast<double>(n));
    tape.backward(loss);
    adam.step(store);
    ++report.updates;
  }
  return report;
}

EndToEndSummary summarize_end_to_end(const text::Article& article, const selector::Selector& selector,
                                     const generator::Generator& generator, const generator::DecodeOptions& decode,
                                     std::size_t max_select, const coherence::CoherenceModel* coherence) {
  if (article.sentences.empty()) throw std::invalid_argument("summarize: article '" + article.id + "' is empty");
  EndToEndSummary out;
  out.extraction = selector.select(selector::prepare_input(article, selector.config().salient_k), max_select).indices;
  if (out.extraction.empty()) out.extraction = {0};
  auto input = generator::make_input(article, out.extraction, generator.vocab());
  out.tokens = decode.beam <= 1 ? generator.greedy_decode(input, decode).tokens
                                : generator.beam_decode(input, decode).tokens;
  if (coherence) out.coherence = coherence::summary_coherence(*coherence, coherence::split_sentences(out.tokens));
  return out;
}

EvalReport evaluate_corpus(const std::vector<std::string>& ids, const std::vector<Sentence>& system,
                           const std::vector<std::vector<Sentence>>& references,
                           const coherence::CoherenceModel* coherence) {
  if (system.size() != references.size() || ids.size() != system.size()) {
    throw std::invalid_argument("evaluate_corpus: " + std::to_string(system.size()) + " summaries for " +
                                std::to_string(references.size()) + " references");
  }
  if (system.empty()) throw std::invalid_argument("evaluate_corpus: empty corpus");
  EvalReport report;
  report.mean.id = "mean";
  for (std::size_t i = 0; i < system.size(); ++i) {
    Sentence ref = text::flatten(references[i]);
    EvalRow row;
    row.id = ids[i];
    row.rouge1 = metrics::rouge_n(1, system[i], ref).f1;
    row.rouge2 = metrics::rouge_n(2, system[i], ref).f1;
    row.rougeL = metrics::rouge_l(system[i], ref).f1;
    if (coherence) row.coherence = coherence::summary_coherence(*coherence, coherence::split_sentences(system[i]));
    report.mean.rouge1 += row.rouge1;
    report.mean.rouge2 += row.rouge2;
    report.mean.rougeL += row.rougeL;
    report.mean.coherence += row.coherence;
    report.rows.push_back(std::move(row));
  }
  const double n = static_cast<double>(system.size());
  report.mean.rouge1 /= n;
  report.mean.rouge2 /= n;
  report.mean.rougeL /= n;
  report.mean.coherence /= n;
  return report;
}

void write_eval_csv(std::ostream& out, const EvalReport& report) {
  out << "id,rouge1,rouge2,rougeL,coherence\n";
  char buf[160];
  auto line = [&](const EvalRow& r) {
    std::snprintf(buf, sizeof buf, ",%.10f,%.10f,%.10f,%.10f\n", r.rouge1, r.rouge2, r.rougeL, r.coherence);
    out << r.id << buf;
  };
  for (const auto& r : report.rows) line(r);
  line(report.mean);
}

nlohmann::json eval_json(const EvalReport& report) {
  return {{"articles", report.rows.size()},
          {"rouge1", report.mean.rouge1},
          {"rouge2", report.mean.rouge2},
          {"rougeL", report.mean.rougeL},
          {"coherence", report.mean.coherence}};
}

}  // namespace seneca::pipeline
