#include "pft/trainer/method.hpp"

#include <algorithm>

#include "pft/core/error.hpp"

namespace pft::trainer {

using actor::Normalization;
using actor::PriorKind;
using actor::PriorSpec;

const std::vector<std::string>& method_names() {
  static const std::vector<std::string> names{"BC",  "CRR",   "CRR-mixed", "AWAC",  "DAgger",
                                              "DAgger-mixed", "MPO", "R-MPO", "R-CRR", "R-CRR-target"};
  return names;
}

namespace {

MethodConfig unit_weights(std::string name, PriorSpec prior, bool dataset, bool replay) {
  MethodConfig m;
  m.name = std::move(name);
  m.uses_dataset = dataset;
  m.uses_replay = replay;
  m.improvement.normalization = Normalization::kUnit;
  m.improvement.prior = std::move(prior);
  return m;
}

MethodConfig advantage_weighted(std::string name, PriorSpec prior, bool dataset, bool replay) {
  MethodConfig m;
  m.name = std::move(name);
  m.uses_dataset = dataset;
  m.uses_replay = replay;
  m.uses_critic = true;
  m.improvement.normalization = Normalization::kAdvantageBaseline;
  m.improvement.prior = std::move(prior);
  m.improvement.temperature = kCrrTemperature;
  m.improvement.weight_clip = 20.0;
  return m;
}

MethodConfig softmax_z(std::string name, PriorSpec prior, bool dataset) {
  MethodConfig m;
  m.name = std::move(name);
  m.uses_dataset = dataset;
  m.uses_replay = true;
  m.uses_critic = true;
  m.improvement.normalization = Normalization::kSoftmaxZ;
  m.improvement.prior = std::move(prior);
  m.improvement.solve_temperature = true;
  m.improvement.kl_bound = kMpoKlBound;
  m.improvement.trust_region = kMpoTrustRegion;
  return m;
}

}  // namespace

MethodConfig build_method(std::string_view name, std::optional<double> beta) {
  const bool mixture = name == "R-MPO" || name == "R-CRR" || name == "R-CRR-target";
  if (beta && !mixture) throw ConfigError("beta only applies to R-MPO, R-CRR and R-CRR-target");
  if (beta && !(*beta >= 0.0 && *beta <= 1.0)) throw ConfigError("beta must lie in [0, 1]");

  const auto logged = PriorSpec::single(PriorKind::kLoggedBehavior);
  const auto teacher = PriorSpec::single(PriorKind::kTeacher);
  if (name == "BC") return unit_weights("BC", logged, true, false);
  if (name == "CRR") return advantage_weighted("CRR", logged, true, false);
  if (name == "CRR-mixed") return advantage_weighted("CRR-mixed", logged, true, true);
  if (name == "AWAC") {
    MethodConfig m = advantage_weighted("AWAC", logged, true, true);
    m.awac_schedule = true;
    m.improvement.temperature = 1.0;
    return m;
  }
  if (name == "DAgger") return unit_weights("DAgger", teacher, false, true);
  if (name == "DAgger-mixed") return unit_weights("DAgger-mixed", teacher, true, true);
  if (name == "MPO") {
    MethodConfig m = softmax_z("MPO", PriorSpec::single(PriorKind::kCurrentPolicy), false);
    m.uses_shaped_reward = true;
    return m;
  }
  if (name == "R-MPO") return softmax_z("R-MPO", PriorSpec::policy_teacher(beta.value_or(kRmpoDefaultBeta)), true);
  if (name == "R-CRR") {
    return advantage_weighted("R-CRR", PriorSpec::logged_teacher(beta.value_or(kRcrrDefaultBeta)), true, true);
  }
  if (name == "R-CRR-target") {
    return advantage_weighted("R-CRR-target", PriorSpec::policy_teacher(beta.value_or(kRcrrDefaultBeta)), true,
                              true);
  }
  throw ConfigError("unknown method '" + std::string(name) + "'");
}

}  // namespace pft::trainer
