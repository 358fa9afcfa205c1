#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "pft/approx/adam.hpp"
#include "pft/approx/policy.hpp"
#include "pft/approx/q_function.hpp"
#include "pft/core/random.hpp"
#include "pft/core/types.hpp"

namespace pft::critic {

struct CriticConfig {
  double gamma = 0.98;
  std::size_t target_period = 100;     // gradient steps between target syncs
  std::size_t bootstrap_samples = 10;  // next-action samples for continuous actions
  approx::AdamConfig optimizer{};
};

using TransitionRef = std::reference_wrapper<const Transition>;

// Categorical projection of a distribution with probabilities `probs` on
// arbitrary locations `values` onto the fixed support (values outside the
// support are clamped to its ends). Adds into `out` scaled by `mass`.
void project_onto_support(const approx::Support& support, std::span<const double> values,
                          std::span<const double> probs, double mass, std::span<double> out);
std::vector<double> project_onto_support(const approx::Support& support, std::span<const double> values,
                                         std::span<const double> probs);

// Policy evaluation by temporal differences with a periodically synced
// target network. Scalar heads regress onto r + gamma * E_{a'~pi} Q_target;
// distributional heads minimize cross-entropy against the projected target.
class CriticLearner {
 public:
  CriticLearner(approx::QFunction q, CriticConfig config);

  const approx::QFunction& online() const { return online_; }
  const approx::QFunction& target() const { return target_; }
  approx::QFunction& mutable_online() { return online_; }
  const CriticConfig& config() const { return config_; }
  std::size_t gradient_steps() const { return steps_; }

  // Mean TD loss over the batch and its gradient; nothing is applied.
  approx::GradientReport td_gradient(std::span<const TransitionRef> batch, const approx::ParametricPolicy& policy,
                                     RandomStream& stream) const;
  // td_gradient, an Adam step, and a target sync every target_period steps.
  approx::GradientReport update(std::span<const TransitionRef> batch, const approx::ParametricPolicy& policy,
                                RandomStream& stream);
  void sync_target();

  // Scalar regression target for one transition (scalar heads).
  double scalar_target(const Transition& t, const approx::ParametricPolicy& policy, RandomStream& stream) const;
  // Projected target distribution for one transition (distributional heads).
  std::vector<double> distributional_target(const Transition& t, const approx::ParametricPolicy& policy,
                                            RandomStream& stream) const;

 private:
  // (action, weight) pairs approximating E_{a'~pi(.|s')}.
  std::vector<std::pair<ActionValue, double>> bootstrap_actions(const Observation& next,
                                                                const approx::ParametricPolicy& policy,
                                                                RandomStream& stream) const;

  approx::QFunction online_;
  approx::QFunction target_;
  CriticConfig config_;
  approx::AdamState adam_;
  approx::GradientReport workspace_;
  std::size_t steps_ = 0;
};

struct AdvantageEstimate {
  double value = 0.0;
  double baseline = 0.0;
  std::size_t m_samples = 0;  // 0 when the baseline is exact
};

// A(s, a) = Q(s, a) - E_{a'~pi} Q(s, a'). With m unset (discrete actions
// only) the baseline is the exact policy-weighted sum; otherwise the mean
// over m policy samples.
AdvantageEstimate advantage(const approx::QFunction& q, const Observation& state, const ActionValue& action,
                            const approx::ParametricPolicy& policy, std::optional<std::size_t> m,
                            RandomStream& stream);

// Baseline alone (shared by every sample drawn at one state).
double value_baseline(const approx::QFunction& q, const Observation& state, const approx::ParametricPolicy& policy,
                      std::optional<std::size_t> m, RandomStream& stream);

}  // namespace pft::critic
