#include "seneca/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace seneca::tensor {

StepReport Adam::step(ParameterStore& params) {
  auto trainable = params.trainable();
  double sq = 0.0;
  for (const auto* p : trainable) {
    if (!p->grad.all_finite()) throw std::runtime_error("adam: non-finite gradient in parameter '" + p->name + "'");
    sq += p->grad.squared_norm();
  }
  StepReport report;
  report.grad_norm = std::sqrt(sq);
  double factor = 1.0;
  if (options_.clip_norm > 0.0 && report.grad_norm > options_.clip_norm) factor = options_.clip_norm / report.grad_norm;
  report.clipped_norm = report.grad_norm * factor;

  ++steps_;
  double t = static_cast<double>(steps_);
  double bc1 = 1.0 - std::pow(options_.beta1, t);
  double bc2 = 1.0 - std::pow(options_.beta2, t);
  for (auto* p : trainable) {
    auto& st = state_[p->name];
    if (st.m.size() != p->value.size()) {
      st.m = Tensor::zeros_like(p->value);
      st.v = Tensor::zeros_like(p->value);
    }
    auto w = p->value.data();
    auto g = p->grad.data();
    auto m = st.m.data();
    auto v = st.v.data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      double gi = g[i] * factor;
      m[i] = options_.beta1 * m[i] + (1.0 - options_.beta1) * gi;
      v[i] = options_.beta2 * v[i] + (1.0 - options_.beta2) * gi * gi;
      w[i] -= options_.lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + options_.eps);
    }
  }
  return report;
}

}  // namespace seneca::tensor
