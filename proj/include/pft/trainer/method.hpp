#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pft/actor/actor.hpp"

namespace pft::trainer {

// One row of the method taxonomy: which stores feed the batches, which
// prior proposes actions, and how they are weighted.
struct MethodConfig {
  std::string name;
  bool uses_dataset = false;
  bool uses_replay = false;
  actor::ImprovementConfig improvement;
  bool uses_critic = false;
  bool uses_shaped_reward = false;
  bool awac_schedule = false;

  bool offline_only() const { return !uses_replay; }
  bool uses_teacher() const { return improvement.prior.uses(actor::PriorKind::kTeacher); }
  // Teacher weight of the prior (0 when the teacher is not a component).
  double beta() const { return improvement.prior.weight_of(actor::PriorKind::kTeacher); }
};

inline constexpr double kRmpoDefaultBeta = 0.1;
inline constexpr double kRcrrDefaultBeta = 0.75;
inline constexpr double kCrrTemperature = 0.1;
inline constexpr double kMpoKlBound = 0.1;
inline constexpr double kMpoTrustRegion = 1e-2;

const std::vector<std::string>& method_names();

// Canonical configuration for a method name; beta overrides the teacher
// weight of the mixture methods (R-MPO, R-CRR, R-CRR-target). Throws
// ConfigError for unknown names or a beta on a method without a mixture.
MethodConfig build_method(std::string_view name, std::optional<double> beta = std::nullopt);

}  // namespace pft::trainer
