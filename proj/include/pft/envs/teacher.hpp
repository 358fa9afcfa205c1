#pragma once

#include <cstddef>
#include <memory>
#include <string_view>
#include <vector>

#include "pft/core/random.hpp"
#include "pft/core/types.hpp"
#include "pft/envs/environment.hpp"

namespace pft::envs {

enum class TeacherTier { kMastery, kGeneralization };

std::string_view to_string(TeacherTier tier);
TeacherTier parse_teacher_tier(std::string_view text);
double default_target_success(TeacherTier tier);  // 0.80 / 0.40

// The deterministic controller a teacher degrades.
class BaseController {
 public:
  virtual ~BaseController() = default;
  virtual ActionValue act(const Observation& obs) const = 0;
};

// Greedy policy from exact value iteration, one solution per blue cell.
std::shared_ptr<const BaseController> make_grid_optimal_controller(double gamma);
// Proportional go-to-block / go-to-target controller for the point task.
std::shared_ptr<const BaseController> make_point_scripted_controller();

// Suboptimal teacher: an epsilon-mixture of a base controller with a noise
// policy. Discrete: (1-eps) * onehot(base) + eps * uniform. Continuous:
// (1-eps) * N(base, sigma^2 I) + eps * U([-1, 1]^d). Queryable at any state.
class TeacherPolicy {
 public:
  TeacherPolicy(std::shared_ptr<const BaseController> base, const EnvSpec& spec, double epsilon,
                TeacherTier tier = TeacherTier::kMastery, double gaussian_sigma = 0.1);

  double epsilon() const { return epsilon_; }
  TeacherTier tier() const { return tier_; }
  double gaussian_sigma() const { return sigma_; }
  TeacherPolicy with_epsilon(double epsilon) const;

  ActionValue sample(const Observation& obs, RandomStream& stream) const;
  ActionValue mode(const Observation& obs) const;
  double log_density(const Observation& obs, const ActionValue& action) const;
  // Discrete only: full action distribution.
  std::vector<double> probabilities(const Observation& obs) const;

 private:
  std::shared_ptr<const BaseController> base_;
  ActionValue::Kind action_kind_;
  std::size_t action_count_;
  std::size_t action_dim_;
  double epsilon_;
  TeacherTier tier_;
  double sigma_;
};

enum class TeacherQuery { kSample, kMode, kLogDensity };

struct CalibrationOptions {
  std::size_t rollouts = 20000;
  double tolerance = 0.0025;
  int max_iterations = 30;
};

// Success rate of the stochastic teacher over `rollouts` episodes. Episode i
// uses layout stream stream.derive(2*i) and action stream stream.derive(2*i+1).
double measure_success(const Environment& env, const TeacherPolicy& teacher, std::size_t rollouts,
                       const RandomStream& stream, bool deterministic = false);

// Bisection on epsilon until measured success is within tolerance of target.
// Throws CalibrationFailed when that does not happen in max_iterations.
TeacherPolicy make_teacher(const Environment& env, std::shared_ptr<const BaseController> base, TeacherTier tier,
                           double target_success, const RandomStream& stream, const CalibrationOptions& options = {});

// Teacher with the environment's default base controller (gamma only matters
// for the grid task).
TeacherPolicy make_teacher(const Environment& env, TeacherTier tier, double target_success,
                           const RandomStream& stream, const CalibrationOptions& options = {},
                           double gamma = 0.98);

std::shared_ptr<const BaseController> default_controller(const Environment& env, double gamma = 0.98);

}  // namespace pft::envs
