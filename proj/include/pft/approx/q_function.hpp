#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "pft/approx/gradient.hpp"
#include "pft/approx/trunk.hpp"
#include "pft/core/random.hpp"
#include "pft/core/types.hpp"

namespace pft::approx {

enum class QHead { kScalar, kDistributional };

// Fixed categorical support: n_atoms evenly spaced values on [v_min, v_max].
struct Support {
  std::size_t n_atoms = 51;
  double v_min = 0.0;
  double v_max = 1.0;

  double spacing() const { return n_atoms > 1 ? (v_max - v_min) / static_cast<double>(n_atoms - 1) : 0.0; }
  double atom(std::size_t i) const { return v_min + spacing() * static_cast<double>(i); }
  std::vector<double> atoms() const;
};

// Q_phi(s, a). With discrete actions the trunk reads the state and emits one
// value (or one atom-logit block) per action. With continuous actions the
// trunk reads [features, action] and emits one value (or one logit block).
class QFunction {
 public:
  static QFunction discrete(Trunk trunk, std::size_t action_count, QHead head, Support support = {});
  static QFunction continuous(Trunk trunk, std::size_t action_dim, QHead head, Support support = {});

  QHead head() const { return head_; }
  const Support& support() const { return support_; }
  const Trunk& trunk() const { return trunk_; }
  bool discrete_actions() const { return action_count_ > 0; }
  std::size_t action_count() const { return action_count_; }
  std::size_t action_dim() const { return action_dim_; }
  std::string architecture() const;

  std::span<const double> parameters() const { return params_; }
  std::span<double> parameters() { return params_; }
  void initialize(RandomStream& stream) { trunk_.initialize(params_, stream); }

  // Scalar head: the value; distributional head: sum_i atom_i * p_i.
  double value(const Observation& state, const ActionValue& action) const;
  // Discrete actions: Q(s, a) for every a.
  std::vector<double> values(const Observation& state) const;
  // Distributional head: atom probabilities at (s, a).
  std::vector<double> atom_probabilities(const Observation& state, const ActionValue& action) const;

  // Adds scale * d/dphi [0.5 * (Q(s,a) - target)^2]; returns scale * that loss.
  double accumulate_squared_error(const Observation& state, const ActionValue& action, double target, double scale,
                                  GradientReport& grad) const;
  // Adds scale * d/dphi [-sum_i target_i log p_i(s,a)]; returns scale * that loss.
  double accumulate_cross_entropy(const Observation& state, const ActionValue& action,
                                  std::span<const double> target_probs, double scale, GradientReport& grad) const;

  GradientReport make_gradient() const { return trunk_.make_gradient(); }

 private:
  QFunction(Trunk trunk, std::size_t action_count, std::size_t action_dim, QHead head, Support support);

  // Forward pass; returns the slice of trunk outputs that belongs to `action`.
  std::span<const double> head_outputs(const Observation& state, const ActionValue& action, Tape& tape,
                                       std::vector<double>& input_buffer, std::size_t& offset) const;
  std::size_t block() const { return head_ == QHead::kScalar ? 1 : support_.n_atoms; }

  Trunk trunk_;
  std::size_t action_count_ = 0;
  std::size_t action_dim_ = 0;
  QHead head_;
  Support support_;
  std::vector<double> params_;
};

}  // namespace pft::approx
