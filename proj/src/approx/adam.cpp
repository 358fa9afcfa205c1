#include "pft/approx/adam.hpp"

#include <algorithm>
#include <cmath>

#include "pft/core/error.hpp"

namespace pft::approx {

void sgd_step(std::span<double> parameters, const GradientReport& gradient, AdamState& state,
              const AdamConfig& config) {
  const std::size_t n = parameters.size();
  if (gradient.gradient.size() != n || state.m.size() != n || state.v.size() != n) {
    throw ContractViolation("sgd_step: parameter, gradient and optimizer lengths differ");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(config.beta1, t);
  const double correction2 = 1.0 - std::pow(config.beta2, t);

  auto update = [&](std::size_t i) {
    const double g = gradient.gradient[i] + config.weight_decay * parameters[i];
    state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * g;
    state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * g * g;
    const double m_hat = state.m[i] / correction1;
    const double v_hat = state.v[i] / correction2;
    parameters[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
  };

  if (gradient.sparse()) {
    std::vector<std::size_t> rows = gradient.rows;
    std::sort(rows.begin(), rows.end());
    rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
    for (std::size_t r : rows) {
      const std::size_t begin = r * gradient.row_width;
      for (std::size_t i = begin; i < begin + gradient.row_width; ++i) update(i);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) update(i);
  }
}

}  // namespace pft::approx
