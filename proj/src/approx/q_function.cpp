#include "pft/approx/q_function.hpp"

#include <cmath>

#include "pft/approx/policy.hpp"
#include "pft/core/error.hpp"

namespace pft::approx {

std::vector<double> Support::atoms() const {
  std::vector<double> z(n_atoms);
  for (std::size_t i = 0; i < n_atoms; ++i) z[i] = atom(i);
  return z;
}

QFunction::QFunction(Trunk trunk, std::size_t action_count, std::size_t action_dim, QHead head, Support support)
    : trunk_(std::move(trunk)),
      action_count_(action_count),
      action_dim_(action_dim),
      head_(head),
      support_(support),
      params_(trunk_.parameter_count(), 0.0) {
  if (head_ == QHead::kDistributional && (support_.n_atoms < 2 || !(support_.v_max > support_.v_min))) {
    throw ContractViolation("distributional head needs >= 2 atoms on a nonempty interval");
  }
}

QFunction QFunction::discrete(Trunk trunk, std::size_t action_count, QHead head, Support support) {
  const std::size_t per_action = head == QHead::kScalar ? 1 : support.n_atoms;
  if (action_count == 0 || trunk.output_dim() != action_count * per_action) {
    throw ContractViolation("discrete Q: trunk output must be actions x head width");
  }
  return QFunction(std::move(trunk), action_count, 0, head, support);
}

QFunction QFunction::continuous(Trunk trunk, std::size_t action_dim, QHead head, Support support) {
  if (trunk.kind() != TrunkKind::kMlp) throw ContractViolation("continuous Q needs a feature trunk");
  const std::size_t width = head == QHead::kScalar ? 1 : support.n_atoms;
  if (action_dim == 0 || trunk.output_dim() != width) {
    throw ContractViolation("continuous Q: trunk output must match head width");
  }
  return QFunction(std::move(trunk), 0, action_dim, head, support);
}

std::string QFunction::architecture() const {
  std::string head = head_ == QHead::kScalar
                         ? "scalar"
                         : "distributional(" + std::to_string(support_.n_atoms) + "," +
                               std::to_string(support_.v_min) + "," + std::to_string(support_.v_max) + ")";
  return head + "/" + trunk_.describe();
}

std::span<const double> QFunction::head_outputs(const Observation& state, const ActionValue& action, Tape& tape,
                                                std::vector<double>& input_buffer, std::size_t& offset) const {
  if (discrete_actions()) {
    if (!action.is_discrete() || action.index >= action_count_) {
      throw ContractViolation("Q: discrete action out of range");
    }
    TrunkInput in;
    if (trunk_.kind() == TrunkKind::kTabular) {
      if (!state.is_discrete()) throw ContractViolation("tabular Q needs discrete observations");
      in.index = state.index;
    } else {
      in.features = state.features;
    }
    offset = action.index * block();
    return trunk_.forward(params_, in, tape).subspan(offset, block());
  }
  if (action.is_discrete() || action.vector.size() != action_dim_) {
    throw ContractViolation("Q: continuous action dimension mismatch");
  }
  input_buffer.assign(state.features.begin(), state.features.end());
  input_buffer.insert(input_buffer.end(), action.vector.begin(), action.vector.end());
  offset = 0;
  return trunk_.forward(params_, {0, input_buffer}, tape);
}

double QFunction::value(const Observation& state, const ActionValue& action) const {
  Tape tape;
  std::vector<double> buffer;
  std::size_t offset = 0;
  const auto out = head_outputs(state, action, tape, buffer, offset);
  if (head_ == QHead::kScalar) return out[0];
  const auto p = softmax(out);
  double q = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) q += support_.atom(i) * p[i];
  return q;
}

std::vector<double> QFunction::values(const Observation& state) const {
  if (!discrete_actions()) throw ContractViolation("values(): discrete actions only");
  TrunkInput in;
  if (trunk_.kind() == TrunkKind::kTabular) {
    in.index = state.index;
  } else {
    in.features = state.features;
  }
  Tape tape;
  const auto out = trunk_.forward(params_, in, tape);
  std::vector<double> q(action_count_);
  for (std::size_t a = 0; a < action_count_; ++a) {
    if (head_ == QHead::kScalar) {
      q[a] = out[a];
    } else {
      const auto p = softmax(out.subspan(a * block(), block()));
      double v = 0.0;
      for (std::size_t i = 0; i < p.size(); ++i) v += support_.atom(i) * p[i];
      q[a] = v;
    }
  }
  return q;
}

std::vector<double> QFunction::atom_probabilities(const Observation& state, const ActionValue& action) const {
  if (head_ != QHead::kDistributional) throw ContractViolation("atom_probabilities: distributional head only");
  Tape tape;
  std::vector<double> buffer;
  std::size_t offset = 0;
  return softmax(head_outputs(state, action, tape, buffer, offset));
}

double QFunction::accumulate_squared_error(const Observation& state, const ActionValue& action, double target,
                                           double scale, GradientReport& grad) const {
  if (head_ != QHead::kScalar) throw ContractViolation("squared error: scalar head only");
  Tape tape;
  std::vector<double> buffer;
  std::size_t offset = 0;
  const double q = head_outputs(state, action, tape, buffer, offset)[0];
  std::vector<double> d_out(trunk_.output_dim(), 0.0);
  d_out[offset] = scale * (q - target);
  trunk_.backward(params_, tape, d_out, grad);
  const double loss = scale * 0.5 * (q - target) * (q - target);
  grad.loss += loss;
  return loss;
}

double QFunction::accumulate_cross_entropy(const Observation& state, const ActionValue& action,
                                           std::span<const double> target_probs, double scale,
                                           GradientReport& grad) const {
  if (head_ != QHead::kDistributional) throw ContractViolation("cross entropy: distributional head only");
  if (target_probs.size() != support_.n_atoms) throw ContractViolation("cross entropy: target size mismatch");
  Tape tape;
  std::vector<double> buffer;
  std::size_t offset = 0;
  const auto logits = head_outputs(state, action, tape, buffer, offset);
  const auto p = softmax(logits);
  double m = logits[0];
  for (double v : logits) m = std::max(m, v);
  double s = 0.0;
  for (double v : logits) s += std::exp(v - m);
  const double lse = m + std::log(s);
  double loss = 0.0;
  double mass = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    loss -= target_probs[i] * (logits[i] - lse);
    mass += target_probs[i];
  }
  // d/dlogit_i of -sum_j t_j log p_j is p_i * sum_j t_j - t_i.
  std::vector<double> d_out(trunk_.output_dim(), 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) d_out[offset + i] = scale * (p[i] * mass - target_probs[i]);
  trunk_.backward(params_, tape, d_out, grad);
  grad.loss += scale * loss;
  return scale * loss;
}

}  // namespace pft::approx
