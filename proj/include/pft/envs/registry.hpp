#pragma once

#include <memory>
#include <string_view>

#include "pft/envs/environment.hpp"
#include "pft/envs/shaped_reward.hpp"

namespace pft::envs {

// "grid-stack" or "point-stack"; wrapped in the reward shaper when shaped.
std::unique_ptr<Environment> make_environment(std::string_view id, bool shaped = false,
                                              const ShapingWeights& weights = {});

}  // namespace pft::envs
