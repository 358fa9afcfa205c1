#include "pft/datastore/rollout.hpp"

namespace pft::datastore {

Episode rollout_episode(envs::Environment& env, const ActionFn& act, RandomStream& layout_stream,
                        RandomStream& action_stream, EpisodeSource source, const LogDensityFn& log_density) {
  Episode episode;
  episode.source = source;
  Observation obs = env.reset(layout_stream);
  episode.transitions.reserve(env.spec().horizon);
  while (!env.done()) {
    Transition t;
    t.action = act(obs, action_stream);
    if (log_density) t.behavior_log_density = log_density(obs, t.action);
    envs::StepResult r = env.step(t.action);
    t.state = std::move(obs);
    t.reward = r.reward;
    t.terminal = r.success;
    t.next_state = r.observation;
    obs = std::move(r.observation);
    if (r.success) episode.success = true;
    episode.transitions.push_back(std::move(t));
  }
  return episode;
}

}  // namespace pft::datastore
