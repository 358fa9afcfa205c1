#pragma once

#include <array>

#include "pft/envs/environment.hpp"

namespace pft::envs {

// Continuous pick-and-place in the unit square. Action (dx, dy, grip-logit)
// in [-1, 1]^3; the agent moves by kMaxStep * (dx, dy) and the gripper is
// closed while grip-logit > 0. Closing within kGraspRadius of the block
// attaches it; opening releases it where it is. Reward 1 when the block rests
// (released) within kSuccessRadius of the target.
//
// Features: agent(2) block(2) target(2) block-agent(2) target-block(2) holding.
class PointStackEnv final : public Environment {
 public:
  static constexpr double kMaxStep = 0.1;
  static constexpr double kSuccessRadius = 0.05;
  static constexpr double kGraspRadius = 0.05;
  static constexpr double kMinSeparation = 0.15;
  static constexpr std::size_t kHorizon = 100;
  static constexpr std::size_t kFeatureDim = 11;
  static constexpr std::size_t kActionDim = 3;

  using Point = std::array<double, 2>;

  struct Layout {
    Point agent{};
    Point block{};
    Point target{};
  };

  PointStackEnv();

  const EnvSpec& spec() const override { return spec_; }
  Observation reset(RandomStream& stream) override;
  Observation reset_to(const Layout& layout);
  StepResult step(const ActionValue& action) override;
  ShapingDistances distances() const override;
  bool done() const override { return done_; }
  std::unique_ptr<Environment> clone() const override;

  const Layout& layout() const { return layout_; }
  bool holding() const { return holding_; }

  Observation observe() const;

  // Inverse of observe(): recovers positions and the holding flag.
  struct Decoded {
    Layout layout;
    bool holding = false;
  };
  static Decoded decode(const Observation& obs);

  static double distance(const Point& a, const Point& b);

 private:
  EnvSpec spec_;
  Layout layout_;
  bool holding_ = false;
  std::size_t steps_ = 0;
  bool done_ = true;
};

}  // namespace pft::envs
