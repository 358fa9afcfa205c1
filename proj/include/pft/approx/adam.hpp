#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pft/approx/gradient.hpp"

namespace pft::approx {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;

  AdamState() = default;
  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

// One Adam update. Row-sparse gradients update only their rows (lazy Adam:
// moments of untouched rows stay frozen); dense gradients update everything.
void sgd_step(std::span<double> parameters, const GradientReport& gradient, AdamState& state,
              const AdamConfig& config);

}  // namespace pft::approx
