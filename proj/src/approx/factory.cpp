#include "pft/approx/factory.hpp"

namespace pft::approx {

ParametricPolicy make_policy(const envs::EnvSpec& spec, const std::vector<std::size_t>& hidden) {
  const bool discrete_actions = spec.action_kind == ActionValue::Kind::kDiscrete;
  const std::size_t outputs = discrete_actions ? spec.action_count : 2 * spec.action_dim;
  Trunk trunk = spec.observation_kind == Observation::Kind::kDiscrete ? Trunk::tabular(spec.state_count, outputs)
                                                                      : Trunk::mlp(spec.feature_dim, hidden, outputs);
  return discrete_actions ? ParametricPolicy::categorical(std::move(trunk), spec.action_count)
                          : ParametricPolicy::gaussian(std::move(trunk), spec.action_dim);
}

QFunction make_q_function(const envs::EnvSpec& spec, QHead head, Support support,
                          const std::vector<std::size_t>& hidden) {
  const std::size_t width = head == QHead::kScalar ? 1 : support.n_atoms;
  if (spec.action_kind == ActionValue::Kind::kDiscrete) {
    const std::size_t outputs = spec.action_count * width;
    Trunk trunk = spec.observation_kind == Observation::Kind::kDiscrete
                      ? Trunk::tabular(spec.state_count, outputs)
                      : Trunk::mlp(spec.feature_dim, hidden, outputs);
    return QFunction::discrete(std::move(trunk), spec.action_count, head, support);
  }
  return QFunction::continuous(Trunk::mlp(spec.feature_dim + spec.action_dim, hidden, width), spec.action_dim, head,
                               support);
}

}  // namespace pft::approx
