#pragma once

#include <string>
#include <utility>
#include <vector>

#include "seneca/autodiff.hpp"
#include "seneca/parameters.hpp"
#include "seneca/rng.hpp"

namespace seneca::tensor {

// Parameter lookup that respects the const-ness of the owning store:
// const stores yield read-only leaves.
inline Var bind(Tape& tape, ParameterStore& store, ParamId id) { return tape.param(store.at(id)); }
inline Var bind(Tape& tape, const ParameterStore& store, ParamId id) { return tape.param(store.at(id)); }

struct Linear {
  ParamId weight = 0;
  ParamId bias = 0;
  bool has_bias = true;

  static Linear create(ParameterStore& store, const std::string& name, std::size_t in, std::size_t out, Rng& rng,
                       bool with_bias = true);

  template <class Store>
  Var operator()(Tape& tape, Store& store, Var x) const {
    Var y = matvec(bind(tape, store, weight), x);
    return has_bias ? add(y, bind(tape, store, bias)) : y;
  }
};

struct LstmState {
  Var h;
  Var c;
};

// Standard LSTM cell without peepholes; gates ordered (input, forget, cell, output).
struct LstmCell {
  ParamId w_input = 0;
  ParamId w_hidden = 0;
  ParamId bias = 0;
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;

  static LstmCell create(ParameterStore& store, const std::string& name, std::size_t input, std::size_t hidden,
                         Rng& rng);

  LstmState zero_state(Tape& tape) const {
    return {tape.constant(Tensor({hidden_size})), tape.constant(Tensor({hidden_size}))};
  }

  template <class Store>
  LstmState step(Tape& tape, Store& store, Var x, const LstmState& state) const {
    Var z = add(add(matvec(bind(tape, store, w_input), x), matvec(bind(tape, store, w_hidden), state.h)),
                bind(tape, store, bias));
    Var hc = lstm_cell(z, state.c);
    return {slice(hc, 0, hidden_size), slice(hc, hidden_size, hidden_size)};
  }
};

// Runs forward and backward cells over a sequence of vectors and returns a
// [T x 2H] matrix of concatenated (forward, backward) states.
struct BiLstm {
  LstmCell forward;
  LstmCell backward;

  static BiLstm create(ParameterStore& store, const std::string& name, std::size_t input, std::size_t hidden,
                       Rng& rng);

  template <class Store>
  Var run(Tape& tape, Store& store, const std::vector<Var>& inputs, LstmState* final_forward = nullptr,
          LstmState* final_backward = nullptr) const {
    std::size_t n = inputs.size();
    std::vector<Var> fwd(n), bwd(n);
    LstmState s = forward.zero_state(tape);
    for (std::size_t i = 0; i < n; ++i) {
      s = forward.step(tape, store, inputs[i], s);
      fwd[i] = s.h;
    }
    if (final_forward) *final_forward = s;
    s = backward.zero_state(tape);
    for (std::size_t i = n; i-- > 0;) {
      s = backward.step(tape, store, inputs[i], s);
      bwd[i] = s.h;
    }
    if (final_backward) *final_backward = s;
    std::vector<Var> rows(n);
    for (std::size_t i = 0; i < n; ++i) rows[i] = concat({fwd[i], bwd[i]});
    return stack(rows);
  }
};

// Kim-style temporal convolution: one filter bank per window width, tanh,
// max-over-time pooling, outputs concatenated across widths.
struct ConvEncoder {
  std::vector<std::size_t> widths;
  std::vector<ParamId> weights;
  std::vector<ParamId> biases;
  std::size_t filters_per_width = 0;
  std::size_t input_size = 0;

  static ConvEncoder create(ParameterStore& store, const std::string& name, std::size_t input,
                            const std::vector<std::size_t>& widths, std::size_t filters_per_width, Rng& rng);

  std::size_t output_size() const { return widths.size() * filters_per_width; }

  template <class Store>
  Var encode(Tape& tape, Store& store, Var tokens) const {
    std::vector<Var> parts;
    parts.reserve(widths.size());
    for (std::size_t i = 0; i < widths.size(); ++i) {
      parts.push_back(conv_max_pool(tokens, bind(tape, store, weights[i]), bind(tape, store, biases[i]), widths[i]));
    }
    return parts.size() == 1 ? parts[0] : concat(parts);
  }
};

// Additive attention scores v . tanh(keys + W q) over the rows of `keys`
// (already projected to the attention space).
struct AdditiveAttention {
  ParamId query = 0;
  ParamId v = 0;

  static AdditiveAttention create(ParameterStore& store, const std::string& name, std::size_t query_size,
                                  std::size_t attn_size, Rng& rng);

  template <class Store>
  Var scores(Tape& tape, Store& store, Var projected_keys, Var q) const {
    Var hidden = tanh(add_rows(projected_keys, matvec(bind(tape, store, query), q)));
    return matvec(hidden, bind(tape, store, v));
  }
};

}  // namespace seneca::tensor
