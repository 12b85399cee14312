#include "seneca/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace seneca::tensor {

Linear Linear::create(ParameterStore& store, const std::string& name, std::size_t in, std::size_t out, Rng& rng,
                      bool with_bias) {
  Linear l;
  l.weight = store.add_xavier(name + ".weight", {out, in}, rng);
  l.has_bias = with_bias;
  if (with_bias) l.bias = store.add_zeros(name + ".bias", {out});
  return l;
}

LstmCell LstmCell::create(ParameterStore& store, const std::string& name, std::size_t input, std::size_t hidden,
                          Rng& rng) {
  LstmCell c;
  c.input_size = input;
  c.hidden_size = hidden;
  c.w_input = store.add_xavier(name + ".w_input", {4 * hidden, input}, rng);
  c.w_hidden = store.add_xavier(name + ".w_hidden", {4 * hidden, hidden}, rng);
  Tensor b({4 * hidden});
  for (std::size_t k = hidden; k < 2 * hidden; ++k) b[k] = 1.0;  // forget gate
  c.bias = store.add(name + ".bias", std::move(b));
  return c;
}

BiLstm BiLstm::create(ParameterStore& store, const std::string& name, std::size_t input, std::size_t hidden,
                      Rng& rng) {
  return {LstmCell::create(store, name + ".fwd", input, hidden, rng),
          LstmCell::create(store, name + ".bwd", input, hidden, rng)};
}

ConvEncoder ConvEncoder::create(ParameterStore& store, const std::string& name, std::size_t input,
                                const std::vector<std::size_t>& widths, std::size_t filters_per_width, Rng& rng) {
  if (widths.empty() || filters_per_width == 0) throw std::invalid_argument("conv encoder: no filters");
  ConvEncoder e;
  e.widths = widths;
  e.filters_per_width = filters_per_width;
  e.input_size = input;
  for (auto w : widths) {
    if (w == 0) throw std::invalid_argument("conv encoder: window width must be positive");
    auto tag = name + ".w" + std::to_string(w);
    e.weights.push_back(store.add_xavier(tag + ".filter", {filters_per_width, w * input}, rng));
    e.biases.push_back(store.add_zeros(tag + ".bias", {filters_per_width}));
  }
  return e;
}

AdditiveAttention AdditiveAttention::create(ParameterStore& store, const std::string& name, std::size_t query_size,
                                            std::size_t attn_size, Rng& rng) {
  AdditiveAttention a;
  a.query = store.add_xavier(name + ".query", {attn_size, query_size}, rng);
  a.v = store.add_uniform(name + ".v", {attn_size}, 1.0 / std::sqrt(static_cast<double>(attn_size)), rng);
  return a;
}

}  // namespace seneca::tensor
