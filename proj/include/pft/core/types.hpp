#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace pft {

// A state as seen by a learner: either an index into a finite state space or
// a fixed-length feature vector.
struct Observation {
  enum class Kind : std::uint8_t { kDiscrete = 0, kFeatures = 1 };

  Kind kind = Kind::kDiscrete;
  std::size_t index = 0;
  std::vector<double> features;

  static Observation discrete(std::size_t index) { return {Kind::kDiscrete, index, {}}; }
  static Observation continuous(std::vector<double> features) {
    return {Kind::kFeatures, 0, std::move(features)};
  }

  bool is_discrete() const { return kind == Kind::kDiscrete; }
  friend bool operator==(const Observation&, const Observation&) = default;
};

// An action: a discrete index or a real vector with components in [-1, 1].
struct ActionValue {
  enum class Kind : std::uint8_t { kDiscrete = 0, kContinuous = 1 };

  Kind kind = Kind::kDiscrete;
  std::size_t index = 0;
  std::vector<double> vector;

  static ActionValue discrete(std::size_t index) { return {Kind::kDiscrete, index, {}}; }
  // Components are clipped into [-1, 1].
  static ActionValue continuous(std::vector<double> components);

  bool is_discrete() const { return kind == Kind::kDiscrete; }
  friend bool operator==(const ActionValue&, const ActionValue&) = default;
};

// One environment step. `terminal` marks a true MDP termination (success);
// horizon truncation is stored as non-terminal so the critic bootstraps.
struct Transition {
  Observation state;
  ActionValue action;
  double reward = 0.0;
  Observation next_state;
  bool terminal = false;
  double behavior_log_density = 0.0;

  friend bool operator==(const Transition&, const Transition&) = default;
};

enum class EpisodeSource : std::uint8_t { kTeacherOffline = 0, kStudentOnline = 1 };

std::string_view to_string(EpisodeSource source);

struct Episode {
  std::vector<Transition> transitions;
  EpisodeSource source = EpisodeSource::kTeacherOffline;
  bool success = false;
  std::uint64_t seed = 0;

  friend bool operator==(const Episode&, const Episode&) = default;
};

}  // namespace pft
