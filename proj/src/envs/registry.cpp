#include "pft/envs/registry.hpp"

#include <string>

#include "pft/core/error.hpp"
#include "pft/envs/grid_stack.hpp"
#include "pft/envs/point_stack.hpp"

namespace pft::envs {

std::unique_ptr<Environment> make_environment(std::string_view id, bool shaped, const ShapingWeights& weights) {
  std::unique_ptr<Environment> env;
  if (id == "grid-stack") {
    env = std::make_unique<GridStackEnv>();
  } else if (id == "point-stack") {
    env = std::make_unique<PointStackEnv>();
  } else {
    throw ConfigError("unknown environment '" + std::string(id) + "'");
  }
  if (shaped) return std::make_unique<ShapedRewardWrapper>(std::move(env), weights);
  return env;
}

}  // namespace pft::envs
