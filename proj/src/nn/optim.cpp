#include "nerkit/nn/optim.hpp"

#include <cmath>

#include "nerkit/error.hpp"

namespace nerkit::nn {

void adam_step(ParamStore& store, const AdamConfig& config, std::size_t step_count) {
  if (!(config.learning_rate > 0.0)) throw ValidationError("learning rate must be positive");
  if (step_count == 0) throw ValidationError("Adam step count is 1-based");
  const double t = static_cast<double>(step_count);
  const double correction1 = 1.0 - std::pow(config.beta1, t);
  const double correction2 = 1.0 - std::pow(config.beta2, t);
  for (auto& [name, p] : store) {
    if (!p.frozen) {
      for (std::size_t i = 0; i < p.value.size(); ++i) {
        const double g = p.grad[i];
        double& m = p.first_moment[i];
        double& v = p.second_moment[i];
        m = config.beta1 * m + (1.0 - config.beta1) * g;
        v = config.beta2 * v + (1.0 - config.beta2) * g * g;
        const double m_hat = m / correction1;
        const double v_hat = v / correction2;
        p.value[i] -= config.learning_rate * (m_hat / (std::sqrt(v_hat) + config.epsilon) + config.weight_decay * p.value[i]);
      }
    }
    p.grad.fill(0.0);
  }
}

}  // namespace nerkit::nn
