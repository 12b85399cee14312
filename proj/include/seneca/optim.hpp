#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "seneca/parameters.hpp"

namespace seneca::tensor {

struct AdamOptions {
  double lr = 0.001;
  double clip_norm = 2.0;  // <= 0 disables clipping
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct StepReport {
  double grad_norm = 0.0;     // before clipping
  double clipped_norm = 0.0;  // after clipping
};

// Adam with global-norm gradient clipping applied before the update.
class Adam {
 public:
  explicit Adam(AdamOptions options = {}) : options_(options) {}

  // Throws if any trainable gradient is non-finite, naming the parameter.
  StepReport step(ParameterStore& params);

  std::uint64_t steps() const { return steps_; }
  AdamOptions& options() { return options_; }
  const AdamOptions& options() const { return options_; }

 private:
  struct Moments {
    Tensor m;
    Tensor v;
  };
  AdamOptions options_;
  std::map<std::string, Moments> state_;
  std::uint64_t steps_ = 0;
};

}  // namespace seneca::tensor
