#pragma once

#include <cstddef>

#include "nerkit/nn/param_store.hpp"

namespace nerkit::nn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// One Adam update with decoupled weight decay over every non-frozen
// parameter, then zeroes all gradient accumulators. step_count is 1-based and
// drives the bias correction.
void adam_step(ParamStore& store, const AdamConfig& config, std::size_t step_count);

}  // namespace nerkit::nn
