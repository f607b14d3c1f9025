#include "nerkit/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "nerkit/error.hpp"

namespace nerkit::nn {

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

std::vector<std::pair<std::string, std::vector<std::size_t>>> check_plan(const ParamStore& store,
                                                                         const GradCheckOptions& options) {
  std::vector<std::string> names = options.only;
  if (names.empty()) {
    for (const auto& [name, p] : store) {
      if (!p.frozen) names.push_back(name);
    }
  }
  std::vector<std::pair<std::string, std::vector<std::size_t>>> plan;
  Rng sampler(options.sample_seed);
  for (const auto& name : names) {
    std::vector<std::size_t> positions(store.at(name).value.size());
    for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = i;
    if (options.max_per_param > 0 && positions.size() > options.max_per_param) {
      sampler.shuffle(positions);
      positions.resize(options.max_per_param);
      std::sort(positions.begin(), positions.end());
    }
    plan.emplace_back(name, std::move(positions));
  }
  return plan;
}

GradCheckReport gradient_check(ParamStore& store, const std::function<double(const ParamStore&)>& loss,
                               const std::function<void(ParamStore&)>& backprop, const GradCheckOptions& options) {
  const double base = loss(store);
  if (!std::isfinite(base)) throw NumericError("gradient check: loss is not finite");
  store.zero_grad();
  backprop(store);

  GradCheckReport report;
  report.tolerance = options.tolerance;
  for (const auto& [name, positions] : check_plan(store, options)) {
    auto& p = store.at(name);
    ParamCheck check{name, positions.size(), 0.0};
    for (const std::size_t i : positions) {
      const double original = p.value[i];
      p.value[i] = original + options.step;
      const double plus = loss(store);
      p.value[i] = original - options.step;
      const double minus = loss(store);
      p.value[i] = original;
      if (!std::isfinite(plus) || !std::isfinite(minus)) {
        throw NumericError("gradient check: loss is not finite around " + name);
      }
      const double numeric = (plus - minus) / (2.0 * options.step);
      const double analytic = p.grad[i] * options.analytic_scale;
      check.max_relative_error = std::max(check.max_relative_error, relative_error(analytic, numeric));
    }
    report.max_relative_error = std::max(report.max_relative_error, check.max_relative_error);
    report.params.push_back(std::move(check));
  }
  return report;
}

}  // namespace nerkit::nn
