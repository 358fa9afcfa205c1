#include "pft/envs/shaped_reward.hpp"

#include "pft/core/error.hpp"

namespace pft::envs {

ShapedRewardWrapper::ShapedRewardWrapper(std::unique_ptr<Environment> inner, ShapingWeights weights)
    : inner_(std::move(inner)), weights_(weights) {
  if (!inner_) throw ContractViolation("shaped reward wrapper needs an inner environment");
}

ShapedRewardWrapper::ShapedRewardWrapper(const ShapedRewardWrapper& other)
    : inner_(other.inner_->clone()), weights_(other.weights_), last_(other.last_) {}

Observation ShapedRewardWrapper::reset(RandomStream& stream) {
  Observation obs = inner_->reset(stream);
  last_ = inner_->distances();
  return obs;
}

StepResult ShapedRewardWrapper::step(const ActionValue& action) {
  StepResult result = inner_->step(action);
  const ShapingDistances now = inner_->distances();
  const double sparse = result.reward;
  result.reward = sparse + weights_.agent_to_object * (last_.agent_to_object - now.agent_to_object) +
                  weights_.object_to_target * (last_.object_to_target - now.object_to_target) +
                  weights_.success_bonus * sparse;
  last_ = now;
  return result;
}

std::unique_ptr<Environment> ShapedRewardWrapper::clone() const {
  return std::make_unique<ShapedRewardWrapper>(*this);
}

}  // namespace pft::envs
