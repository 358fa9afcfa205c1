#include "pft/critic/critic.hpp"

#include <algorithm>
#include <cmath>

#include "pft/core/error.hpp"

namespace pft::critic {

using approx::QHead;

void project_onto_support(const approx::Support& support, std::span<const double> values,
                          std::span<const double> probs, double mass, std::span<double> out) {
  if (values.size() != probs.size() || out.size() != support.n_atoms) {
    throw ContractViolation("projection: size mismatch");
  }
  const double dz = support.spacing();
  const auto last = static_cast<double>(support.n_atoms - 1);
  for (std::size_t j = 0; j < values.size(); ++j) {
    const double p = mass * probs[j];
    if (p == 0.0) continue;
    const double tz = std::clamp(values[j], support.v_min, support.v_max);
    const double b = std::clamp((tz - support.v_min) / dz, 0.0, last);
    const double lo = std::floor(b);
    const double hi = std::ceil(b);
    const auto l = static_cast<std::size_t>(lo);
    const auto u = static_cast<std::size_t>(hi);
    if (l == u) {
      out[l] += p;
    } else {
      out[l] += p * (hi - b);
      out[u] += p * (b - lo);
    }
  }
}

std::vector<double> project_onto_support(const approx::Support& support, std::span<const double> values,
                                         std::span<const double> probs) {
  std::vector<double> out(support.n_atoms, 0.0);
  project_onto_support(support, values, probs, 1.0, out);
  return out;
}

CriticLearner::CriticLearner(approx::QFunction q, CriticConfig config)
    : online_(std::move(q)),
      target_(online_),
      config_(config),
      adam_(online_.parameters().size()),
      workspace_(online_.make_gradient()) {
  if (!(config_.gamma >= 0.0 && config_.gamma < 1.0)) throw ContractViolation("critic gamma must lie in [0, 1)");
  if (config_.target_period == 0) throw ContractViolation("critic target period must be positive");
}

void CriticLearner::sync_target() {
  std::copy(online_.parameters().begin(), online_.parameters().end(), target_.parameters().begin());
}

std::vector<std::pair<ActionValue, double>> CriticLearner::bootstrap_actions(const Observation& next,
                                                                             const approx::ParametricPolicy& policy,
                                                                             RandomStream& stream) const {
  std::vector<std::pair<ActionValue, double>> out;
  if (online_.discrete_actions()) {
    const auto p = policy.probabilities(next);
    for (std::size_t a = 0; a < p.size(); ++a) {
      if (p[a] > 0.0) out.emplace_back(ActionValue::discrete(a), p[a]);
    }
    return out;
  }
  const double w = 1.0 / static_cast<double>(config_.bootstrap_samples);
  for (std::size_t i = 0; i < config_.bootstrap_samples; ++i) out.emplace_back(policy.sample(next, stream), w);
  return out;
}

double CriticLearner::scalar_target(const Transition& t, const approx::ParametricPolicy& policy,
                                    RandomStream& stream) const {
  if (t.terminal) return t.reward;
  double expected = 0.0;
  if (online_.discrete_actions()) {
    // Exact expectation: one forward pass gives every action's value.
    const auto p = policy.probabilities(t.next_state);
    const auto q = target_.values(t.next_state);
    for (std::size_t a = 0; a < p.size(); ++a) expected += p[a] * q[a];
  } else {
    for (const auto& [a, w] : bootstrap_actions(t.next_state, policy, stream)) {
      expected += w * target_.value(t.next_state, a);
    }
  }
  return t.reward + config_.gamma * expected;
}

std::vector<double> CriticLearner::distributional_target(const Transition& t, const approx::ParametricPolicy& policy,
                                                         RandomStream& stream) const {
  const approx::Support& support = online_.support();
  std::vector<double> out(support.n_atoms, 0.0);
  if (t.terminal) {
    const double r = t.reward;
    const double one = 1.0;
    project_onto_support(support, std::span<const double>(&r, 1), std::span<const double>(&one, 1), 1.0, out);
    return out;
  }
  std::vector<double> shifted(support.n_atoms);
  for (std::size_t i = 0; i < support.n_atoms; ++i) shifted[i] = t.reward + config_.gamma * support.atom(i);
  for (const auto& [a, w] : bootstrap_actions(t.next_state, policy, stream)) {
    const auto probs = target_.atom_probabilities(t.next_state, a);
    project_onto_support(support, shifted, probs, w, out);
  }
  return out;
}

approx::GradientReport CriticLearner::td_gradient(std::span<const TransitionRef> batch,
                                                  const approx::ParametricPolicy& policy,
                                                  RandomStream& stream) const {
  approx::GradientReport grad = online_.make_gradient();
  if (batch.empty()) throw ContractViolation("td_gradient: empty batch");
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (const Transition& t : batch) {
    if (online_.head() == QHead::kScalar) {
      online_.accumulate_squared_error(t.state, t.action, scalar_target(t, policy, stream), scale, grad);
    } else {
      online_.accumulate_cross_entropy(t.state, t.action, distributional_target(t, policy, stream), scale, grad);
    }
  }
  grad.finalize();
  return grad;
}

approx::GradientReport CriticLearner::update(std::span<const TransitionRef> batch,
                                             const approx::ParametricPolicy& policy, RandomStream& stream) {
  if (batch.empty()) throw ContractViolation("critic update: empty batch");
  // Targets first, from parameters as they were before this step.
  const double scale = 1.0 / static_cast<double>(batch.size());
  workspace_.clear();
  for (const Transition& t : batch) {
    if (online_.head() == QHead::kScalar) {
      online_.accumulate_squared_error(t.state, t.action, scalar_target(t, policy, stream), scale, workspace_);
    } else {
      online_.accumulate_cross_entropy(t.state, t.action, distributional_target(t, policy, stream), scale,
                                       workspace_);
    }
  }
  workspace_.finalize();
  if (!std::isfinite(workspace_.loss)) throw NumericDivergence("critic loss is not finite");
  approx::sgd_step(online_.parameters(), workspace_, adam_, config_.optimizer);
  ++steps_;
  if (steps_ % config_.target_period == 0) sync_target();
  return workspace_;
}

double value_baseline(const approx::QFunction& q, const Observation& state, const approx::ParametricPolicy& policy,
                      std::optional<std::size_t> m, RandomStream& stream) {
  if (!m) {
    if (!q.discrete_actions()) throw ContractViolation("exact baseline needs discrete actions");
    const auto p = policy.probabilities(state);
    const auto values = q.values(state);
    double b = 0.0;
    for (std::size_t a = 0; a < p.size(); ++a) b += p[a] * values[a];
    return b;
  }
  if (*m == 0) throw ContractViolation("advantage: m must be at least 1");
  double b = 0.0;
  for (std::size_t i = 0; i < *m; ++i) b += q.value(state, policy.sample(state, stream));
  return b / static_cast<double>(*m);
}

AdvantageEstimate advantage(const approx::QFunction& q, const Observation& state, const ActionValue& action,
                            const approx::ParametricPolicy& policy, std::optional<std::size_t> m,
                            RandomStream& stream) {
  AdvantageEstimate est;
  est.baseline = value_baseline(q, state, policy, m, stream);
  est.value = q.value(state, action) - est.baseline;
  est.m_samples = m.value_or(0);
  return est;
}

}  // namespace pft::critic
