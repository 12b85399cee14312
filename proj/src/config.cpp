#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "seneca/pipeline.hpp"

namespace seneca::pipeline {

namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
  throw std::invalid_argument("config: " + key + " = '" + value + "' is not " + expected);
}

template <class T>
T parse_value(const std::string& key, const std::string& v);

template <>
std::size_t parse_value<std::size_t>(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty()) bad_value(key, v, "a non-negative integer");
  return out;
}

template <>
double parse_value<double>(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty()) bad_value(key, v, "a number");
  return out;
}

template <>
bool parse_value<bool>(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(key, v, "a boolean");
}

template <>
std::string parse_value<std::string>(const std::string&, const std::string& v) {
  return v;
}

template <>
std::vector<std::size_t> parse_value<std::vector<std::size_t>>(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_value<std::size_t>(key, item));
  if (out.empty()) bad_value(key, v, "a comma-separated list");
  return out;
}

std::string format_value(std::size_t v) { return std::to_string(v); }
std::string format_value(bool v) { return v ? "true" : "false"; }
std::string format_value(const std::string& v) { return v; }

std::string format_value(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::string format_value(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

struct Field {
  std::string key;
  std::function<void(PipelineConfig&, const std::string&)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

template <class Access>
Field field(std::string key, Access access) {
  using T = std::remove_cvref_t<decltype(access(std::declval<PipelineConfig&>()))>;
  return {key,
          [access, key](PipelineConfig& c, const std::string& v) { access(c) = parse_value<T>(key, v); },
          [access](const PipelineConfig& c) { return format_value(access(const_cast<PipelineConfig&>(c))); }};
}

#define SENECA_FIELD(key, member) field(key, [](PipelineConfig& c) -> auto& { return c.member; })

const std::vector<Field>& fields() {
  static const std::vector<Field> all = {
      SENECA_FIELD("corpus", corpus),
      SENECA_FIELD("eval_corpus", eval_corpus),
      SENECA_FIELD("out_dir", out_dir),
      SENECA_FIELD("seed", seed),
      SENECA_FIELD("vocab_cap", vocab_cap),
      SENECA_FIELD("salient_k", sel_model.salient_k),
      SENECA_FIELD("toy.size", toy_size),
      SENECA_FIELD("toy.kind", toy_kind),
      SENECA_FIELD("coh.embedding_dim", coh_model.embedding_dim),
      SENECA_FIELD("coh.widths", coh_model.widths),
      SENECA_FIELD("coh.filters_per_width", coh_model.filters_per_width),
      SENECA_FIELD("coh.hidden", coh_model.hidden),
      SENECA_FIELD("coh.epochs", coh_train.epochs),
      SENECA_FIELD("coh.batch_size", coh_train.batch_size),
      SENECA_FIELD("coh.lr", coh_train.lr),
      SENECA_FIELD("coh.clip_norm", coh_train.clip_norm),
      SENECA_FIELD("coh.max_triples", coh_max_triples),
      SENECA_FIELD("coh.max_negative_distance", triples.max_negative_distance),
      SENECA_FIELD("coh.self_repetition_fraction", triples.self_repetition_fraction),
      SENECA_FIELD("sel.embedding_dim", sel_model.embedding_dim),
      SENECA_FIELD("sel.widths", sel_model.widths),
      SENECA_FIELD("sel.filters_per_width", sel_model.filters_per_width),
      SENECA_FIELD("sel.encoder_hidden", sel_model.encoder_hidden),
      SENECA_FIELD("sel.decoder_hidden", sel_model.decoder_hidden),
      SENECA_FIELD("sel.attention_dim", sel_model.attention_dim),
      SENECA_FIELD("sel.mask_repeats", sel_model.mask_repeats),
      SENECA_FIELD("sel.epochs", sel_train.epochs),
      SENECA_FIELD("sel.batch_size", sel_train.batch_size),
      SENECA_FIELD("sel.lr", sel_train.lr),
      SENECA_FIELD("sel.clip_norm", sel_train.clip_norm),
      SENECA_FIELD("gen.embedding_dim", gen_model.embedding_dim),
      SENECA_FIELD("gen.encoder_hidden", gen_model.encoder_hidden),
      SENECA_FIELD("gen.decoder_hidden", gen_model.decoder_hidden),
      SENECA_FIELD("gen.attention_dim", gen_model.attention_dim),
      SENECA_FIELD("gen.epochs", gen_ml.epochs),
      SENECA_FIELD("gen.batch_size", gen_ml.batch_size),
      SENECA_FIELD("gen.lr", gen_ml.lr),
      SENECA_FIELD("gen.clip_norm", gen_ml.clip_norm),
      SENECA_FIELD("rl.steps", rl_steps),
      SENECA_FIELD("rl.batch_size", rl_batch),
      SENECA_FIELD("rl.samples", gen_rl.samples_per_item),
      SENECA_FIELD("rl.lr", gen_rl.lr),
      SENECA_FIELD("rl.clip_norm", gen_rl.clip_norm),
      SENECA_FIELD("rl.max_len", gen_rl.max_len),
      SENECA_FIELD("rl.temperature", gen_rl.temperature),
      SENECA_FIELD("reward.gamma_coh", reward.gamma_coh),
      SENECA_FIELD("reward.gamma_ref", reward.gamma_ref),
      SENECA_FIELD("reward.gamma_app", reward.gamma_app),
      SENECA_FIELD("reward.use_coh", reward.use_coh),
      SENECA_FIELD("reward.use_ref", reward.use_ref),
      SENECA_FIELD("reward.use_app", reward.use_app),
      SENECA_FIELD("connect.steps", connect.steps),
      SENECA_FIELD("connect.batch_size", connect.batch_size),
      SENECA_FIELD("connect.samples", connect.samples),
      SENECA_FIELD("connect.lr", connect.lr),
      SENECA_FIELD("connect.clip_norm", connect.clip_norm),
      SENECA_FIELD("connect.max_select", connect.max_select),
      SENECA_FIELD("connect.max_len", connect.max_len),
      SENECA_FIELD("connect.generator", connect_generator),
      SENECA_FIELD("decode.beam", decode.beam),
      SENECA_FIELD("decode.alpha", decode.alpha),
      SENECA_FIELD("decode.max_len", decode.max_len),
      SENECA_FIELD("decode.block_trigrams", decode.block_trigrams),
      SENECA_FIELD("summarize.max_select", max_select),
      SENECA_FIELD("summarize.selector", summarize_selector),
      SENECA_FIELD("summarize.generator", summarize_generator),
      SENECA_FIELD("summarize.checkpoint", summarize_checkpoint),
  };
  return all;
}

#undef SENECA_FIELD

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

void require_one_of(const std::string& key, const std::string& value, std::initializer_list<const char*> allowed) {
  for (const char* a : allowed)
    if (value == a) return;
  std::string list;
  for (const char* a : allowed) list += std::string(list.empty() ? "" : "|") + a;
  throw std::invalid_argument("config: " + key + " = '" + value + "' must be one of " + list);
}

}  // namespace

void PipelineConfig::set(const std::string& key, const std::string& value) {
  for (const auto& f : fields()) {
    if (f.key == key) {
      f.set(*this, value);
      return;
    }
  }
  throw std::invalid_argument("config: unknown key '" + key + "'");
}

PipelineConfig PipelineConfig::parse(std::istream& in) {
  PipelineConfig cfg;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    }
    try {
      cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config " + path.string());
  return parse(in);
}

std::string PipelineConfig::serialize() const {
  std::string out;
  for (const auto& f : fields()) out += f.key + " = " + f.get(*this) + "\n";
  return out;
}

void PipelineConfig::validate() const {
  if (reward.gamma_coh < 0 || reward.gamma_ref < 0 || reward.gamma_app < 0) {
    throw std::invalid_argument("config: reward weights must be non-negative");
  }
  require_one_of("toy.kind", toy_kind, {"chain", "planted"});
  require_one_of("connect.generator", connect_generator, {"rl", "ml"});
  require_one_of("summarize.selector", summarize_selector, {"connected", "base"});
  require_one_of("summarize.generator", summarize_generator, {"rl", "ml"});
  if (decode.beam == 0) throw std::invalid_argument("config: decode.beam must be at least 1");
  if (rl_batch == 0 || gen_rl.samples_per_item == 0) {
    throw std::invalid_argument("config: rl.batch_size and rl.samples must be positive");
  }
  if (triples.self_repetition_fraction < 0 || triples.self_repetition_fraction > 1) {
    throw std::invalid_argument("config: coh.self_repetition_fraction must lie in [0, 1]");
  }
}

}  // namespace seneca::pipeline
