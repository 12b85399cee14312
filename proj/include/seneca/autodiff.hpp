#pragma once

#include <functional>
#include <initializer_list>
#include <span>
#include <unordered_map>
#include <vector>

#include "seneca/parameters.hpp"
#include "seneca/tensor.hpp"

namespace seneca::tensor {

class Tape;

// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  bool valid() const { return tape_ != nullptr && id_ >= 0; }
  Tape* tape() const { return tape_; }
  int id() const { return id_; }

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t size() const { return value().size(); }
  double item() const { return value().item(); }

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

// Records differentiable operations in execution order. Nodes are appended
// after their inputs, so reverse creation order is a reverse topological
// order and backward() visits each node once.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, int self)>;

  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }
  std::size_t node_count() const { return nodes_.size(); }

  Var constant(Tensor value);
  // Gradients flow into p.grad on backward() when recording and trainable.
  Var param(Parameter& p);
  // Read-only access; never receives gradients. Safe to share p across threads.
  Var param(const Parameter& p);

  const Tensor& value(int id) const;
  bool needs_grad(int id) const { return nodes_[id].needs_grad; }
  bool needs_grad(Var v) const { return v.valid() && nodes_[v.id()].needs_grad; }
  // Gradient of the last backward() w.r.t. v; zeros when v was unreachable.
  Tensor grad(Var v) const;

  void backward(Var loss);

  // Op authoring interface.
  Var push(Tensor value, std::span<const Var> inputs, BackwardFn fn);
  Var push(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn) {
    return push(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(fn));
  }
  const Tensor& out_grad(int id) const { return nodes_[id].grad; }
  // Lazily allocated accumulation buffer; callers must check needs_grad first.
  Tensor& grad_buffer(int id);

 private:
  struct Node {
    Tensor value;
    const Tensor* ref = nullptr;
    Parameter* param = nullptr;
    bool needs_grad = false;
    Tensor grad;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, int> param_nodes_;
  bool record_;
};

// Matrix products. matmul: [m x k][k x n]; matvec: [m x n][n];
// matmul_transposed: a * b^T for [m x k][n x k]; vecmat: a^T M for [r][r x c].
Var matmul(Var a, Var b);
Var matvec(Var w, Var x);
Var matmul_transposed(Var a, Var b);
Var vecmat(Var a, Var m);

// Elementwise, identical shapes.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
// Every entry of `a` times the single entry of `s`.
Var scale_by(Var a, Var s);
Var add_scalar(Var a, double c);
Var one_minus(Var a);
Var tanh(Var a);
Var sigmoid(Var a);
Var exp(Var a);
// Natural log with inputs floored at 1e-300.
Var log(Var a);
Var relu(Var a);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }

// Matrix [r x c] plus vector [c] broadcast over rows.
Var add_rows(Var m, Var v);
Var mean_rows(Var m);

// Softmax over a vector. Masked entries (mask[i] == true) get exactly zero.
Var softmax(Var a);
Var softmax(Var a, const std::vector<bool>& mask);
Var log_softmax(Var a, const std::vector<bool>& mask = {});
// Row-wise softmax of a matrix (axis 1).
Var softmax_rows(Var m);

Var sum(Var a);
Var dot(Var a, Var b);
Var pick(Var a, std::size_t index);
Var concat(std::span<const Var> parts);
inline Var concat(std::initializer_list<Var> parts) {
  return concat(std::span<const Var>(parts.begin(), parts.size()));
}
Var slice(Var a, std::size_t start, std::size_t length);
Var row(Var m, std::size_t r);
Var stack(std::span<const Var> rows);
Var embedding(Var table, std::span<const int> ids);
// out[ids[i]] += values[i]; output length `size`.
Var scatter_add(Var values, std::span<const int> ids, std::size_t size);

// max over window positions of tanh(W . window + b) per filter. `tokens` is
// [T x d]; windows shorter than `width` are zero-padded. Ties pick the
// earliest position. Output [F].
Var conv_max_pool(Var tokens, Var weights, Var bias, std::size_t width);

// Fused LSTM cell nonlinearity. gates [4H] laid out as (input, forget,
// cell, output); returns [2H] = (h', c').
Var lstm_cell(Var gates, Var cell);

}  // namespace seneca::tensor
