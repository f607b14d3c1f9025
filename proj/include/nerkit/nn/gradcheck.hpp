#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "nerkit/nn/param_store.hpp"

namespace nerkit::nn {

struct GradCheckOptions {
  double tolerance = 1e-4;
  double step = 1e-5;
  // Multiplies analytic gradients before comparison; anything other than 1 is
  // fault injection used to prove the check can fail.
  double analytic_scale = 1.0;
  // Empty means every trainable parameter in the store.
  std::vector<std::string> only;
  // Checks at most this many scalars per parameter, picked with `sample_seed`.
  // 0 checks all of them.
  std::size_t max_per_param = 0;
  std::uint64_t sample_seed = 0;
};

struct ParamCheck {
  std::string name;
  std::size_t scalars = 0;
  double max_relative_error = 0.0;
};

struct GradCheckReport {
  std::vector<ParamCheck> params;
  double max_relative_error = 0.0;
  double tolerance = 0.0;
  bool passed() const { return max_relative_error < tolerance; }
};

// Which scalars of which parameters a check with these options compares.
std::vector<std::pair<std::string, std::vector<std::size_t>>> check_plan(const ParamStore& store,
                                                                         const GradCheckOptions& options);

// |a - n| / max(|a|, |n|, 1e-8)
double relative_error(double analytic, double numeric);

// loss evaluates the scalar objective at the store's current values.
// backprop must leave d(loss)/d(param) in every gradient slot; the store's
// gradients are zeroed before it runs.
GradCheckReport gradient_check(ParamStore& store, const std::function<double(const ParamStore&)>& loss,
                               const std::function<void(ParamStore&)>& backprop, const GradCheckOptions& options = {});

}  // namespace nerkit::nn
