#pragma once

#include <cstddef>
#include <memory>
#include <string>

#include "pft/core/random.hpp"
#include "pft/core/types.hpp"

namespace pft::envs {

struct EnvSpec {
  std::string id;
  Observation::Kind observation_kind = Observation::Kind::kDiscrete;
  std::size_t state_count = 0;  // discrete observations
  std::size_t feature_dim = 0;  // feature observations
  ActionValue::Kind action_kind = ActionValue::Kind::kDiscrete;
  std::size_t action_count = 0;  // discrete actions
  std::size_t action_dim = 0;    // continuous actions
  std::size_t horizon = 0;
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool terminal = false;   // episode over: success or horizon
  bool truncated = false;  // ended by the horizon cap, not by success
  bool success = false;
};

// Distances the reward shaper works from: agent to the object it must grasp
// (zero while holding it) and object to its target.
struct ShapingDistances {
  double agent_to_object = 0.0;
  double object_to_target = 0.0;
};

class Environment {
 public:
  virtual ~Environment() = default;

  virtual const EnvSpec& spec() const = 0;
  virtual Observation reset(RandomStream& stream) = 0;
  // Throws ContractViolation when called after the episode terminated.
  virtual StepResult step(const ActionValue& action) = 0;
  virtual ShapingDistances distances() const = 0;
  virtual bool done() const = 0;
  virtual std::unique_ptr<Environment> clone() const = 0;
};

}  // namespace pft::envs
