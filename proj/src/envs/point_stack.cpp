#include "pft/envs/point_stack.hpp"

#include <algorithm>
#include <cmath>

#include "pft/core/error.hpp"

namespace pft::envs {

PointStackEnv::PointStackEnv() {
  spec_.id = "point-stack";
  spec_.observation_kind = Observation::Kind::kFeatures;
  spec_.feature_dim = kFeatureDim;
  spec_.action_kind = ActionValue::Kind::kContinuous;
  spec_.action_dim = kActionDim;
  spec_.horizon = kHorizon;
}

double PointStackEnv::distance(const Point& a, const Point& b) {
  return std::hypot(a[0] - b[0], a[1] - b[1]);
}

Observation PointStackEnv::reset(RandomStream& stream) {
  // Rejection sampling keeps the three points pairwise separated.
  Layout layout;
  do {
    for (Point* p : {&layout.agent, &layout.block, &layout.target}) {
      (*p)[0] = stream.uniform();
      (*p)[1] = stream.uniform();
    }
  } while (distance(layout.agent, layout.block) < kMinSeparation ||
           distance(layout.agent, layout.target) < kMinSeparation ||
           distance(layout.block, layout.target) < kMinSeparation);
  return reset_to(layout);
}

Observation PointStackEnv::reset_to(const Layout& layout) {
  layout_ = layout;
  holding_ = false;
  steps_ = 0;
  done_ = false;
  return observe();
}

StepResult PointStackEnv::step(const ActionValue& action) {
  if (done_) throw ContractViolation("step called on a terminated point episode");
  if (action.is_discrete() || action.vector.size() != kActionDim) {
    throw ContractViolation("point-stack takes 3-dimensional continuous actions");
  }
  const double dx = std::clamp(action.vector[0], -1.0, 1.0);
  const double dy = std::clamp(action.vector[1], -1.0, 1.0);
  const bool grip = action.vector[2] > 0.0;

  if (holding_ && !grip) {
    holding_ = false;
  } else if (!holding_ && grip && distance(layout_.agent, layout_.block) <= kGraspRadius) {
    holding_ = true;
  }
  layout_.agent[0] = std::clamp(layout_.agent[0] + kMaxStep * dx, 0.0, 1.0);
  layout_.agent[1] = std::clamp(layout_.agent[1] + kMaxStep * dy, 0.0, 1.0);
  if (holding_) layout_.block = layout_.agent;
  ++steps_;

  StepResult result;
  result.success = !holding_ && distance(layout_.block, layout_.target) <= kSuccessRadius;
  result.reward = result.success ? 1.0 : 0.0;
  result.terminal = result.success || steps_ >= kHorizon;
  result.truncated = result.terminal && !result.success;
  done_ = result.terminal;
  result.observation = observe();
  return result;
}

ShapingDistances PointStackEnv::distances() const {
  return {holding_ ? 0.0 : distance(layout_.agent, layout_.block),
          distance(layout_.block, layout_.target)};
}

std::unique_ptr<Environment> PointStackEnv::clone() const {
  return std::make_unique<PointStackEnv>(*this);
}

Observation PointStackEnv::observe() const {
  const auto& [a, b, t] = layout_;
  return Observation::continuous({a[0], a[1], b[0], b[1], t[0], t[1], b[0] - a[0], b[1] - a[1],
                                  t[0] - b[0], t[1] - b[1], holding_ ? 1.0 : 0.0});
}

PointStackEnv::Decoded PointStackEnv::decode(const Observation& obs) {
  if (obs.is_discrete() || obs.features.size() != kFeatureDim) {
    throw ContractViolation("point-stack observation must have 11 features");
  }
  const auto& f = obs.features;
  return {{{f[0], f[1]}, {f[2], f[3]}, {f[4], f[5]}}, f[10] > 0.5};
}

}  // namespace pft::envs
