#pragma once

#include <memory>

#include "pft/envs/environment.hpp"

namespace pft::envs {

struct ShapingWeights {
  double agent_to_object = 0.1;   // per unit of distance reduction
  double object_to_target = 0.1;  // per unit of distance reduction
  double success_bonus = 1.0;     // added on top of the sparse success reward
};

// Dense progress reward for online RL without a teacher:
//   r' = r + w_a * (d_a(prev) - d_a) + w_o * (d_o(prev) - d_o) + w_s * r
// With all weights zero the wrapper is observationally the inner env.
class ShapedRewardWrapper final : public Environment {
 public:
  ShapedRewardWrapper(std::unique_ptr<Environment> inner, ShapingWeights weights);
  ShapedRewardWrapper(const ShapedRewardWrapper& other);

  const EnvSpec& spec() const override { return inner_->spec(); }
  Observation reset(RandomStream& stream) override;
  StepResult step(const ActionValue& action) override;
  ShapingDistances distances() const override { return inner_->distances(); }
  bool done() const override { return inner_->done(); }
  std::unique_ptr<Environment> clone() const override;

  const Environment& inner() const { return *inner_; }
  const ShapingWeights& weights() const { return weights_; }

 private:
  std::unique_ptr<Environment> inner_;
  ShapingWeights weights_;
  ShapingDistances last_{};
};

}  // namespace pft::envs
