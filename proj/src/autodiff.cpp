#include "seneca/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace seneca::tensor {

const Tensor& Var::value() const {
  if (!valid()) throw std::logic_error("autodiff: use of an empty Var");
  return tape_->value(id_);
}

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::param(Parameter& p) {
  auto it = param_nodes_.find(&p);
  if (it != param_nodes_.end()) return Var(this, it->second);
  Node n;
  n.ref = &p.value;
  n.needs_grad = record_ && p.trainable;
  if (n.needs_grad) n.param = &p;
  nodes_.push_back(std::move(n));
  int id = static_cast<int>(nodes_.size() - 1);
  param_nodes_[&p] = id;
  return Var(this, id);
}

Var Tape::param(const Parameter& p) {
  auto it = param_nodes_.find(&p);
  if (it != param_nodes_.end()) return Var(this, it->second);
  Node n;
  n.ref = &p.value;
  nodes_.push_back(std::move(n));
  int id = static_cast<int>(nodes_.size() - 1);
  param_nodes_[&p] = id;
  return Var(this, id);
}

const Tensor& Tape::value(int id) const {
  const auto& n = nodes_.at(static_cast<std::size_t>(id));
  return n.ref ? *n.ref : n.value;
}

Tensor Tape::grad(Var v) const {
  const auto& n = nodes_.at(static_cast<std::size_t>(v.id()));
  if (n.grad.empty()) return Tensor(value(v.id()).shape());
  return n.grad;
}

Tensor& Tape::grad_buffer(int id) {
  auto& n = nodes_[static_cast<std::size_t>(id)];
  if (n.grad.empty() && !value(id).empty()) n.grad = Tensor(value(id).shape());
  return n.grad;
}

Var Tape::push(Tensor value, std::span<const Var> inputs, BackwardFn fn) {
  Node n;
  n.value = std::move(value);
  if (record_) {
    for (const auto& v : inputs) {
      if (v.tape() != this) throw std::logic_error("autodiff: mixing Vars from different tapes");
      n.needs_grad = n.needs_grad || nodes_[static_cast<std::size_t>(v.id())].needs_grad;
    }
    if (n.needs_grad) n.backward = std::move(fn);
  }
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

void Tape::backward(Var loss) {
  if (!loss.valid() || loss.tape() != this) throw std::logic_error("autodiff: backward on a foreign or empty Var");
  if (!record_) throw std::logic_error("autodiff: backward on a tape that is not recording");
  if (value(loss.id()).size() != 1) {
    throw std::invalid_argument("autodiff: backward needs a scalar loss, got " +
                                shape_string(value(loss.id()).shape()));
  }
  if (!nodes_[static_cast<std::size_t>(loss.id())].needs_grad) {
    throw std::logic_error("autodiff: loss is detached from every trainable parameter");
  }
  for (auto& n : nodes_) n.grad = Tensor();
  grad_buffer(loss.id())[0] = 1.0;
  for (int i = loss.id(); i >= 0; --i) {
    auto& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.needs_grad || n.grad.empty()) continue;
    if (n.backward) n.backward(*this, i);
    if (n.param) n.param->grad.add_(n.grad);
  }
}

namespace {

Tape& tape_of(Var a) {
  if (!a.valid()) throw std::logic_error("autodiff: use of an empty Var");
  return *a.tape();
}

void require_same(const char* op, Var a, Var b) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                                shape_string(b.shape()));
  }
}

void require_rank(const char* op, Var a, std::size_t rank) {
  if (a.value().rank() != rank) {
    throw std::invalid_argument(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                                shape_string(a.shape()));
  }
}

template <class F>
Var unary(Var a, F forward, std::function<double(double x, double y)> derivative) {
  auto& t = tape_of(a);
  Tensor out = a.value();
  for (auto& x : out.data()) x = forward(x);
  int ia = a.id();
  return t.push(std::move(out), {a}, [ia, derivative](Tape& tp, int self) {
    if (!tp.needs_grad(ia)) return;
    const auto& g = tp.out_grad(self);
    const auto& x = tp.value(ia);
    const auto& y = tp.value(self);
    auto& ga = tp.grad_buffer(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * derivative(x[i], y[i]);
  });
}

}  // namespace

Var matmul(Var a, Var b) {
  auto& t = tape_of(a);
  require_rank("matmul", a, 2);
  require_rank("matmul", b, 2);
  const auto& A = a.value();
  const auto& B = b.value();
  std::size_t m = A.rows(), k = A.cols(), n = B.cols();
  if (B.rows() != k) {
    throw std::invalid_argument("matmul: shape mismatch " + shape_string(A.shape()) + " x " + shape_string(B.shape()));
  }
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      double aip = A.at(i, p);
      if (aip == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) out.at(i, j) += aip * B.at(p, j);
    }
  int ia = a.id(), ib = b.id();
  return t.push(std::move(out), {a, b}, [ia, ib, m, k, n](Tape& tp, int self) {
    const auto& g = tp.out_grad(self);
    const auto& A = tp.value(ia);
    const auto& B = tp.value(ib);
    if (tp.needs_grad(ia)) {
      auto& ga = tp.grad_buffer(ia);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += g.at(i, j) * B.at(p, j);
          ga.at(i, p) += s;
        }
    }
    if (tp.needs_grad(ib)) {
      auto& gb = tp.grad_buffer(ib);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double aip = A.at(i, p);
          for (std::size_t j = 0; j < n; ++j) gb.at(p, j) += aip * g.at(i, j);
        }
    }
  });
}

Var matvec(Var w, Var x) {
  auto& t = tape_of(w);
  require_rank("matvec", w, 2);
  require_rank("matvec", x, 1);
  const auto& W = w.value();
  const auto& X = x.value();
  std::size_t m = W.rows(), n = W.cols();
  if (X.size() != n) {
    throw std::invalid_argument("matvec: shape mismatch " + shape_string(W.shape()) + " x " + shape_string(X.shape()));
  }
  Tensor out({m});
  for (std::size_t i = 0; i < m; ++i) {
    const double* wr = W.data().data() + i * n;
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += wr[j] * X[j];
    out[i] = s;
  }
  int iw = w.id(), ix = x.id();
  return t.push(std::move(out), {w, x}, [iw, ix, m, n](Tape& tp, int self) {
    const auto& g = tp.out_grad(self);
    if (tp.needs_grad(iw)) {
      const auto& X = tp.value(ix);
      auto& gw = tp.grad_buffer(iw);
      for (std::size_t i = 0; i < m; ++i) {
        double gi = g[i];
        if (gi == 0.0) continue;
        double* row = gw.data().data() + i * n;
        for (std::size_t j = 0; j < n; ++j) row[j] += gi * X[j];
      }
    }
    if (tp.needs_grad(ix)) {
      const auto& W = tp.value(iw);
      auto& gx = tp.grad_buffer(ix);
      for (std::size_t i = 0; i < m; ++i) {
        double gi = g[i];
        if (gi == 0.0) continue;
        const double* row = W.data().data() + i * n;
        for (std::size_t j = 0; j < n; ++j) gx[j] += gi * row[j];
      }
    }
  });
}

Var matmul_transposed(Var a, Var b) {
  auto& t = tape_of(a);
  require_rank("matmul_transposed", a, 2);
  require_rank("matmul_transposed", b, 2);
  const auto& A = a.value();
  const auto& B = b.value();
  std::size_t m = A.rows(), k = A.cols(), n = B.rows();
  if (B.cols() != k) {
    throw std::invalid_argument("matmul_transposed: shape mismatch " + shape_string(A.shape()) + " x " +
                                shape_string(B.shape()) + "^T");
  }
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += A.at(i, p) * B.at(j, p);
      out.at(i, j) = s;
    }
  int ia = a.id(), ib = b.id();
  return t.push(std::move(out), {a, b}, [ia, ib, m, k, n](Tape& tp, int self) {
    const auto& g = tp.out_grad(self);
    const auto& A = tp.value(ia);
    const auto& B = tp.value(ib);
    if (tp.needs_grad(ia)) {
      auto& ga = tp.grad_buffer(ia);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          double gij = g.at(i, j);
          for (std::size_t p = 0; p < k; ++p) ga.at(i, p) += gij * B.at(j, p);
        }
    }
    if (tp.needs_grad(ib)) {
      auto& gb = tp.grad_buffer(ib);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          double gij = g.at(i, j);
          for (std::size_t p = 0; p < k; ++p) gb.at(j, p) += gij * A.at(i, p);
        }
    }
  });
}

Var vecmat(Var a, Var m) {
  auto& t = tape_of(a);
  require_rank("vecmat", a, 1);
  require_rank("vecmat", m, 2);
  const auto& A = a.value();
  const auto& M = m.value();
  std::size_t r = M.rows(), c = M.cols();
  if (A.size() != r) {
    throw std::invalid_argument("vecmat: shape mismatch " + shape_string(A.shape()) + " x " + shape_string(M.shape()));
  }
  Tensor out({c});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j] += A[i] * M.at(i, j);
  int ia = a.id(), im = m.id();
  return t.push(std::move(out), {a, m}, [ia, im, r, c](Tape& tp, int self) {
    const auto& g = tp.out_grad(self);
    if (tp.needs_grad(ia)) {
      const auto& M = tp.value(im);
      auto& ga = tp.grad_buffer(ia);
      for (std::size_t i = 0; i < r; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < c; ++j) s += g[j] * M.at(i, j);
        ga[i] += s;
      }
    }
    if (tp.needs_grad(im)) {
      const auto& A = tp.value(ia);
      auto& gm = tp.grad_buffer(im);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) gm.at(i, j) += A[i] * g[j];
    }
  });
}

Var add(Var a, Var b) {
  auto& t = tape_of(a);
  require_same("add", a, b);
  Tensor out = a.value();
  out.add_(b.value());
  int ia = a.id(), ib = b.id();
  return t.push(std::move(out), {a, b}, [ia, ib](Tape& tp, int self) {
    const auto& g = tp.out_grad(self);
    if (tp.needs_grad(ia)) tp.grad_buffer(ia).add_(g);
    if (tp.needs_grad(ib)) tp.grad_buffer(ib).add_(g);
  });
}

Var sub(Var a, Var b) {
  auto& t = tape_of(a);
  require_same("sub", a, b);
  Tensor out = a.value();
  const auto& B = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= B[i];
  int ia = a.id(), ib = b.id();
  return t.push(std::move(out), {a, b}, [ia, ib](Tape& tp, int self) {
    const auto& g = tp.out_grad(self);
    if (tp.needs_grad(ia)) tp.grad_buffer(ia).add_(g);
    if (tp.needs_grad(ib)) {
      auto& gb = tp.grad_buffer(ib);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

Var mul(Var a, Var b) {
  auto& t = tape_of(a);
  require_same("mul", a, b);
  Tensor out = a.value();
  const auto& B = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= B[i];
  int ia = a.id(), ib = b.id();
  return t.push(std::move(out), {a, b}, [ia, ib](Tape& tp, int self) {
    const auto& g = tp.out_grad(self);
    if (tp.needs_grad(ia)) {
      const auto& B = tp.value(ib);
      auto& ga = tp.grad_buffer(ia);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * B[i];
    }
    if (tp.needs_grad(ib)) {
      const auto& A = tp.value(ia);
      auto& gb = tp.grad_buffer(ib);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * A[i];
    }
  });
}

Var scale(Var a, double factor) {
  return unary(a, [factor](double x) { return factor * x; }, [factor](double, double) { return factor; });
}

Var scale_by(Var a, Var s) {
  auto& t = tape_of(a);
  if (s.size() != 1) throw std::invalid_argument("scale_by: expected a single-entry factor, got " + shape_string(s.shape()));
  const double f = s.value()[0];
  Tensor out = a.value();
  out.scale_(f);
  int ia = a.id(), is = s.id();
  return t.push(std::move(out), {a, s}, [ia, is](Tape& tp, int self) {
    const auto& g = tp.out_grad(self);
    if (tp.needs_grad(ia)) {
      const double f = tp.value(is)[0];
      auto& ga = tp.grad_buffer(ia);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * f;
    }
    if (tp.needs_grad(is)) {
      const auto& A = tp.value(ia);
      double acc = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * A[i];
      tp.grad_buffer(is)[0] += acc;
    }
  });
}

Var add_scalar(Var a, double c) {
  return unary(a, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

Var one_minus(Var a) {
  return unary(a, [](double x) { return 1.0 - x; }, [](double, double) { return -1.0; });
}

Var tanh(Var a) {
  return unary(a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(Var a) {
  return unary(
      a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); }, [](double, double y) { return y * (1.0 - y); });
}

Var exp(Var a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(Var a) {
  static constexpr double kFloor = 1e-300;
  return unary(
      a, [](double x) { return std::log(std::max(x, kFloor)); },
      [](double x, double) { return x > kFloor ? 1.0 / x : 0.0; });
}

Var relu(Var a) {
  return unary(a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var add_rows(Var m, Var v) {
  auto& t = tape_of(m);
  require_rank("add_rows", m, 2);
  const auto& M = m.value();
  const auto& V = v.value();
  std::size_t r = M.rows(), c = M.cols();
  if (V.size() != c) {
    throw std::invalid_argument("add_rows: shape mismatch " + shape_string(M.shape()) + " + " + shape_string(V.shape()));
  }
  Tensor out = M;
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out.at(i, j) += V[j];
  int im = m.id(), iv = v.id();
  return t.push(std::move(out), {m, v}, [im, iv, r, c](Tape& tp, int self) {
    const auto& g = tp.out_grad(self);
    if (tp.needs_grad(im)) tp.grad_buffer(im).add_(g);
    if (tp.needs_grad(iv)) {
      auto& gv = tp.grad_buffer(iv);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) gv[j] += g.at(i, j);
    }
  });
}

Var mean_rows(Var m) {
  auto& t = tape_of(m);
  require_rank("mean_rows", m, 2);
  const auto& M = m.value();
  std::size_t r = M.rows(), c = M.cols();
  if (r == 0) throw std::invalid_argument("mean_rows: empty matrix");
  Tensor out({c});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j] += M.at(i, j) / static_cast<double>(r);
  int im = m.id();
  return t.push(std::move(out), {m}, [im, r, c](Tape& tp, int self) {
    if (!tp.needs_grad(im)) return;
    const auto& g = tp.out_grad(self);
    auto& gm = tp.grad_buffer(im);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) gm.at(i, j) += g[j] / static_cast<double>(r);
  });
}

namespace {

void softmax_into(std::span<const double> x, const std::vector<bool>& mask, std::span<double> y) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < x.size(); ++i)
    if (mask.empty() || !mask[i]) mx = std::max(mx, x[i]);
  if (!std::isfinite(mx)) throw std::invalid_argument("softmax: every entry is masked");
  double z = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = (!mask.empty() && mask[i]) ? 0.0 : std::exp(x[i] - mx);
    z += y[i];
  }
  for (auto& v : y) v /= z;
}

void softmax_backward(std::span<const double> y, std::span<const double> g, std::span<double> gx) {
  double dotp = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) dotp += g[i] * y[i];
  for (std::size_t i = 0; i < y.size(); ++i) gx[i] += y[i] * (g[i] - dotp);
}

}  // namespace

Var softmax(Var a) { return softmax(a, {}); }

Var softmax(Var a, const std::vector<bool>& mask) {
  auto& t = tape_of(a);
  require_rank("softmax", a, 1);
  if (!mask.empty() && mask.size() != a.size()) throw std::invalid_argument("softmax: mask length mismatch");
  Tensor out(a.shape());
  softmax_into(a.value().data(), mask, out.data());
  int ia = a.id();
  return t.push(std::move(out), {a}, [ia](Tape& tp, int self) {
    if (!tp.needs_grad(ia)) return;
    softmax_backward(tp.value(self).data(), tp.out_grad(self).data(), tp.grad_buffer(ia).data());
  });
}

Var log_softmax(Var a, const std::vector<bool>& mask) {
  auto& t = tape_of(a);
  require_rank("log_softmax", a, 1);
  if (!mask.empty() && mask.size() != a.size()) throw std::invalid_argument("log_softmax: mask length mismatch");
  const auto& x = a.value();
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < x.size(); ++i)
    if (mask.empty() || !mask[i]) mx = std::max(mx, x[i]);
  if (!std::isfinite(mx)) throw std::invalid_argument("log_softmax: every entry is masked");
  double z = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (mask.empty() || !mask[i]) z += std::exp(x[i] - mx);
  double lz = mx + std::log(z);
  Tensor out(a.shape());
  for (std::size_t i = 0; i < x.size(); ++i)
    out[i] = (!mask.empty() && mask[i]) ? -std::numeric_limits<double>::infinity() : x[i] - lz;
  int ia = a.id();
  return t.push(std::move(out), {a}, [ia, mask](Tape& tp, int self) {
    if (!tp.needs_grad(ia)) return;
    const auto& y = tp.value(self);
    const auto& g = tp.out_grad(self);
    auto& gx = tp.grad_buffer(ia);
    double gs = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i)
      if (mask.empty() || !mask[i]) gs += g[i];
    for (std::size_t i = 0; i < y.size(); ++i)
      if (mask.empty() || !mask[i]) gx[i] += g[i] - std::exp(y[i]) * gs;
  });
}

Var softmax_rows(Var m) {
  auto& t = tape_of(m);
  require_rank("softmax_rows", m, 2);
  const auto& M = m.value();
  std::size_t r = M.rows(), c = M.cols();
  Tensor out(M.shape());
  for (std::size_t i = 0; i < r; ++i) softmax_into(M.row(i), {}, out.data().subspan(i * c, c));
  int im = m.id();
  return t.push(std::move(out), {m}, [im, r, c](Tape& tp, int self) {
    if (!tp.needs_grad(im)) return;
    const auto& y = tp.value(self);
    const auto& g = tp.out_grad(self);
    auto& gx = tp.grad_buffer(im);
    for (std::size_t i = 0; i < r; ++i)
      softmax_backward(y.data().subspan(i * c, c), g.data().subspan(i * c, c), gx.data().subspan(i * c, c));
  });
}

Var sum(Var a) {
  auto& t = tape_of(a);
  double s = 0.0;
  for (double x : a.value().data()) s += x;
  int ia = a.id();
  return t.push(Tensor::scalar(s), {a}, [ia](Tape& tp, int self) {
    if (!tp.needs_grad(ia)) return;
    double g = tp.out_grad(self)[0];
    for (auto& x : tp.grad_buffer(ia).data()) x += g;
  });
}

Var dot(Var a, Var b) {
  auto& t = tape_of(a);
  require_same("dot", a, b);
  const auto& A = a.value();
  const auto& B = b.value();
  double s = 0.0;
  for (std::size_t i = 0; i < A.size(); ++i) s += A[i] * B[i];
  int ia = a.id(), ib = b.id();
  return t.push(Tensor::scalar(s), {a, b}, [ia, ib](Tape& tp, int self) {
    double g = tp.out_grad(self)[0];
    if (tp.needs_grad(ia)) {
      const auto& B = tp.value(ib);
      auto& ga = tp.grad_buffer(ia);
      for (std::size_t i = 0; i < B.size(); ++i) ga[i] += g * B[i];
    }
    if (tp.needs_grad(ib)) {
      const auto& A = tp.value(ia);
      auto& gb = tp.grad_buffer(ib);
      for (std::size_t i = 0; i < A.size(); ++i) gb[i] += g * A[i];
    }
  });
}

Var pick(Var a, std::size_t index) {
  auto& t = tape_of(a);
  if (index >= a.size()) {
    throw std::out_of_range("pick: index " + std::to_string(index) + " outside " + shape_string(a.shape()));
  }
  int ia = a.id();
  return t.push(Tensor::scalar(a.value()[index]), {a}, [ia, index](Tape& tp, int self) {
    if (tp.needs_grad(ia)) tp.grad_buffer(ia)[index] += tp.out_grad(self)[0];
  });
}

Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat: no inputs");
  auto& t = tape_of(parts[0]);
  std::vector<double> data;
  std::vector<std::pair<int, std::size_t>> spans;
  for (const auto& p : parts) {
    spans.emplace_back(p.id(), p.size());
    auto d = p.value().data();
    data.insert(data.end(), d.begin(), d.end());
  }
  return t.push(Tensor::vector(std::move(data)), parts, [spans](Tape& tp, int self) {
    const auto& g = tp.out_grad(self);
    std::size_t off = 0;
    for (auto [id, n] : spans) {
      if (tp.needs_grad(id)) {
        auto& gp = tp.grad_buffer(id);
        for (std::size_t i = 0; i < n; ++i) gp[i] += g[off + i];
      }
      off += n;
    }
  });
}

Var slice(Var a, std::size_t start, std::size_t length) {
  auto& t = tape_of(a);
  require_rank("slice", a, 1);
  if (start + length > a.size()) throw std::out_of_range("slice: range outside " + shape_string(a.shape()));
  auto d = a.value().data().subspan(start, length);
  int ia = a.id();
  return t.push(Tensor::vector({d.begin(), d.end()}), {a}, [ia, start, length](Tape& tp, int self) {
    if (!tp.needs_grad(ia)) return;
    const auto& g = tp.out_grad(self);
    auto& ga = tp.grad_buffer(ia);
    for (std::size_t i = 0; i < length; ++i) ga[start + i] += g[i];
  });
}

Var row(Var m, std::size_t r) {
  auto& t = tape_of(m);
  require_rank("row", m, 2);
  if (r >= m.value().rows()) throw std::out_of_range("row: index outside " + shape_string(m.shape()));
  auto d = m.value().row(r);
  std::size_t c = d.size();
  int im = m.id();
  return t.push(Tensor::vector({d.begin(), d.end()}), {m}, [im, r, c](Tape& tp, int self) {
    if (!tp.needs_grad(im)) return;
    const auto& g = tp.out_grad(self);
    auto& gm = tp.grad_buffer(im);
    for (std::size_t j = 0; j < c; ++j) gm.at(r, j) += g[j];
  });
}

Var stack(std::span<const Var> rows) {
  if (rows.empty()) throw std::invalid_argument("stack: no rows");
  auto& t = tape_of(rows[0]);
  std::size_t c = rows[0].size();
  std::vector<double> data;
  data.reserve(rows.size() * c);
  std::vector<int> ids;
  for (const auto& r : rows) {
    if (r.size() != c) throw std::invalid_argument("stack: rows of unequal length");
    auto d = r.value().data();
    data.insert(data.end(), d.begin(), d.end());
    ids.push_back(r.id());
  }
  return t.push(Tensor::matrix(rows.size(), c, std::move(data)), rows, [ids, c](Tape& tp, int self) {
    const auto& g = tp.out_grad(self);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (!tp.needs_grad(ids[i])) continue;
      auto& gr = tp.grad_buffer(ids[i]);
      for (std::size_t j = 0; j < c; ++j) gr[j] += g[i * c + j];
    }
  });
}

Var embedding(Var table, std::span<const int> ids) {
  auto& t = tape_of(table);
  require_rank("embedding", table, 2);
  const auto& T = table.value();
  std::size_t d = T.cols();
  std::vector<int> idx(ids.begin(), ids.end());
  std::vector<double> data;
  data.reserve(idx.size() * d);
  for (int id : idx) {
    if (id < 0 || static_cast<std::size_t>(id) >= T.rows()) {
      throw std::out_of_range("embedding: id " + std::to_string(id) + " outside table " + shape_string(T.shape()));
    }
    auto r = T.row(static_cast<std::size_t>(id));
    data.insert(data.end(), r.begin(), r.end());
  }
  int it = table.id();
  return t.push(Tensor::matrix(idx.size(), d, std::move(data)), {table}, [it, idx, d](Tape& tp, int self) {
    if (!tp.needs_grad(it)) return;
    const auto& g = tp.out_grad(self);
    auto& gt = tp.grad_buffer(it);
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t j = 0; j < d; ++j) gt.at(static_cast<std::size_t>(idx[i]), j) += g[i * d + j];
  });
}

Var scatter_add(Var values, std::span<const int> ids, std::size_t size) {
  auto& t = tape_of(values);
  require_rank("scatter_add", values, 1);
  if (ids.size() != values.size()) throw std::invalid_argument("scatter_add: ids/values length mismatch");
  std::vector<int> idx(ids.begin(), ids.end());
  Tensor out({size});
  const auto& V = values.value();
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || static_cast<std::size_t>(idx[i]) >= size) throw std::out_of_range("scatter_add: id out of range");
    out[static_cast<std::size_t>(idx[i])] += V[i];
  }
  int iv = values.id();
  return t.push(std::move(out), {values}, [iv, idx](Tape& tp, int self) {
    if (!tp.needs_grad(iv)) return;
    const auto& g = tp.out_grad(self);
    auto& gv = tp.grad_buffer(iv);
    for (std::size_t i = 0; i < idx.size(); ++i) gv[i] += g[static_cast<std::size_t>(idx[i])];
  });
}

Var conv_max_pool(Var tokens, Var weights, Var bias, std::size_t width) {
  auto& t = tape_of(tokens);
  require_rank("conv_max_pool", tokens, 2);
  require_rank("conv_max_pool", weights, 2);
  const auto& X = tokens.value();
  const auto& W = weights.value();
  const auto& B = bias.value();
  std::size_t T = X.rows(), d = X.cols(), F = W.rows();
  if (T == 0) throw std::invalid_argument("conv_max_pool: empty token sequence");
  if (width == 0) throw std::invalid_argument("conv_max_pool: window width must be positive");
  if (W.cols() != width * d || B.size() != F) {
    throw std::invalid_argument("conv_max_pool: filter shape " + shape_string(W.shape()) + " does not fit width " +
                                std::to_string(width) + " over " + shape_string(X.shape()));
  }
  std::size_t positions = T >= width ? T - width + 1 : 1;
  Tensor out({F});
  std::vector<std::size_t> argmax(F, 0);
  for (std::size_t f = 0; f < F; ++f) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < positions; ++p) {
      double s = B[f];
      for (std::size_t k = 0; k < width && p + k < T; ++k) {
        const double* w = W.data().data() + f * width * d + k * d;
        const double* x = X.data().data() + (p + k) * d;
        for (std::size_t j = 0; j < d; ++j) s += w[j] * x[j];
      }
      double a = std::tanh(s);
      if (a > best) {
        best = a;
        argmax[f] = p;
      }
    }
    out[f] = best;
  }
  int ix = tokens.id(), iw = weights.id(), ib = bias.id();
  return t.push(std::move(out), {tokens, weights, bias},
                [ix, iw, ib, argmax, width, T, d, F](Tape& tp, int self) {
                  const auto& g = tp.out_grad(self);
                  const auto& y = tp.value(self);
                  const auto& X = tp.value(ix);
                  const auto& W = tp.value(iw);
                  bool gx = tp.needs_grad(ix), gw = tp.needs_grad(iw), gb = tp.needs_grad(ib);
                  for (std::size_t f = 0; f < F; ++f) {
                    double ds = g[f] * (1.0 - y[f] * y[f]);
                    if (ds == 0.0) continue;
                    std::size_t p = argmax[f];
                    if (gb) tp.grad_buffer(ib)[f] += ds;
                    for (std::size_t k = 0; k < width && p + k < T; ++k) {
                      for (std::size_t j = 0; j < d; ++j) {
                        if (gw) tp.grad_buffer(iw).at(f, k * d + j) += ds * X.at(p + k, j);
                        if (gx) tp.grad_buffer(ix).at(p + k, j) += ds * W.at(f, k * d + j);
                      }
                    }
                  }
                });
}

Var lstm_cell(Var gates, Var cell) {
  auto& t = tape_of(gates);
  require_rank("lstm_cell", gates, 1);
  const auto& Z = gates.value();
  const auto& C = cell.value();
  std::size_t H = C.size();
  if (Z.size() != 4 * H) {
    throw std::invalid_argument("lstm_cell: gates " + shape_string(Z.shape()) + " do not match cell " +
                                shape_string(C.shape()));
  }
  auto sig = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
  // act = (i, f, g, o) activations, cached for backward.
  std::vector<double> act(4 * H);
  Tensor out({2 * H});
  for (std::size_t k = 0; k < H; ++k) {
    double i = sig(Z[k]), f = sig(Z[H + k]), g = std::tanh(Z[2 * H + k]), o = sig(Z[3 * H + k]);
    act[k] = i;
    act[H + k] = f;
    act[2 * H + k] = g;
    act[3 * H + k] = o;
    double c = f * C[k] + i * g;
    out[H + k] = c;
    out[k] = o * std::tanh(c);
  }
  int iz = gates.id(), ic = cell.id();
  return t.push(std::move(out), {gates, cell}, [iz, ic, H, act](Tape& tp, int self) {
    const auto& g = tp.out_grad(self);
    const auto& y = tp.value(self);
    const auto& C = tp.value(ic);
    bool need_z = tp.needs_grad(iz), need_c = tp.needs_grad(ic);
    for (std::size_t k = 0; k < H; ++k) {
      double i = act[k], f = act[H + k], gg = act[2 * H + k], o = act[3 * H + k];
      double c = y[H + k];
      double tc = std::tanh(c);
      double dh = g[k];
      double dc = g[H + k] + dh * o * (1.0 - tc * tc);
      if (need_z) {
        auto& gz = tp.grad_buffer(iz);
        gz[k] += dc * gg * i * (1.0 - i);
        gz[H + k] += dc * C[k] * f * (1.0 - f);
        gz[2 * H + k] += dc * i * (1.0 - gg * gg);
        gz[3 * H + k] += dh * tc * o * (1.0 - o);
      }
      if (need_c) tp.grad_buffer(ic)[k] += dc * f;
    }
  });
}

}  // namespace seneca::tensor
