#pragma once

#include <functional>

#include "pft/core/random.hpp"
#include "pft/core/types.hpp"
#include "pft/envs/environment.hpp"

namespace pft::datastore {

using ActionFn = std::function<ActionValue(const Observation&, RandomStream&)>;
// Log-density of the executed action under the acting policy (0 if unknown).
using LogDensityFn = std::function<double(const Observation&, const ActionValue&)>;

// Runs one episode to success or the horizon. The layout comes from
// layout_stream, every action draw from action_stream. Transitions are
// terminal only on success.
Episode rollout_episode(envs::Environment& env, const ActionFn& act, RandomStream& layout_stream,
                        RandomStream& action_stream, EpisodeSource source, const LogDensityFn& log_density = {});

}  // namespace pft::datastore
