#include "pft/envs/teacher.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "pft/core/error.hpp"
#include "pft/envs/grid_stack.hpp"
#include "pft/envs/point_stack.hpp"
#include "pft/envs/shaped_reward.hpp"
#include "pft/envs/value_iteration.hpp"

namespace pft::envs {

std::string_view to_string(TeacherTier tier) {
  return tier == TeacherTier::kMastery ? "mastery" : "generalization";
}

TeacherTier parse_teacher_tier(std::string_view text) {
  if (text == "mastery") return TeacherTier::kMastery;
  if (text == "generalization") return TeacherTier::kGeneralization;
  throw ConfigError("unknown teacher tier '" + std::string(text) + "'");
}

double default_target_success(TeacherTier tier) { return tier == TeacherTier::kMastery ? 0.80 : 0.40; }

namespace {

class GridOptimalController final : public BaseController {
 public:
  explicit GridOptimalController(double gamma) {
    solutions_.reserve(GridStackEnv::kCells);
    for (std::size_t blue = 0; blue < GridStackEnv::kCells; ++blue) {
      solutions_.push_back(solve_optimal(blue, gamma));
    }
  }

  ActionValue act(const Observation& obs) const override {
    const auto s = GridStackEnv::decode(obs.index);
    return ActionValue::discrete(solutions_[s.blue].greedy[GridStackEnv::layout_index(s.agent, s.red)]);
  }

 private:
  std::vector<GridSolution> solutions_;
};

class PointScriptedController final : public BaseController {
 public:
  ActionValue act(const Observation& obs) const override {
    const auto [layout, holding] = PointStackEnv::decode(obs);
    constexpr double kArrive = 0.03;
    auto toward = [](const PointStackEnv::Point& from, const PointStackEnv::Point& to) {
      return std::array<double, 2>{std::clamp((to[0] - from[0]) / PointStackEnv::kMaxStep, -1.0, 1.0),
                                   std::clamp((to[1] - from[1]) / PointStackEnv::kMaxStep, -1.0, 1.0)};
    };
    if (!holding) {
      if (PointStackEnv::distance(layout.agent, layout.block) <= kArrive) {
        return ActionValue::continuous({0.0, 0.0, 1.0});
      }
      const auto d = toward(layout.agent, layout.block);
      return ActionValue::continuous({d[0], d[1], -1.0});
    }
    if (PointStackEnv::distance(layout.block, layout.target) <= kArrive) {
      return ActionValue::continuous({0.0, 0.0, -1.0});
    }
    const auto d = toward(layout.block, layout.target);
    return ActionValue::continuous({d[0], d[1], 1.0});
  }
};

double log_add(double a, double b) {
  if (a == -INFINITY) return b;
  if (b == -INFINITY) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

}  // namespace

std::shared_ptr<const BaseController> make_grid_optimal_controller(double gamma) {
  return std::make_shared<GridOptimalController>(gamma);
}

std::shared_ptr<const BaseController> make_point_scripted_controller() {
  return std::make_shared<PointScriptedController>();
}

TeacherPolicy::TeacherPolicy(std::shared_ptr<const BaseController> base, const EnvSpec& spec, double epsilon,
                             TeacherTier tier, double gaussian_sigma)
    : base_(std::move(base)),
      action_kind_(spec.action_kind),
      action_count_(spec.action_count),
      action_dim_(spec.action_dim),
      epsilon_(epsilon),
      tier_(tier),
      sigma_(gaussian_sigma) {
  if (!base_) throw ContractViolation("teacher needs a base controller");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ContractViolation("teacher epsilon must lie in [0, 1]");
  if (!(gaussian_sigma > 0.0)) throw ContractViolation("teacher sigma must be positive");
}

TeacherPolicy TeacherPolicy::with_epsilon(double epsilon) const {
  TeacherPolicy copy = *this;
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ContractViolation("teacher epsilon must lie in [0, 1]");
  copy.epsilon_ = epsilon;
  return copy;
}

ActionValue TeacherPolicy::sample(const Observation& obs, RandomStream& stream) const {
  const bool noise = stream.uniform() < epsilon_;
  if (action_kind_ == ActionValue::Kind::kDiscrete) {
    return noise ? ActionValue::discrete(stream.uniform_index(action_count_)) : base_->act(obs);
  }
  std::vector<double> a(action_dim_);
  if (noise) {
    for (double& x : a) x = stream.uniform(-1.0, 1.0);
  } else {
    const ActionValue mean = base_->act(obs);
    for (std::size_t i = 0; i < action_dim_; ++i) a[i] = mean.vector[i] + sigma_ * stream.normal();
  }
  return ActionValue::continuous(std::move(a));
}

ActionValue TeacherPolicy::mode(const Observation& obs) const {
  if (action_kind_ == ActionValue::Kind::kDiscrete && epsilon_ >= 1.0) return ActionValue::discrete(0);
  return base_->act(obs);
}

std::vector<double> TeacherPolicy::probabilities(const Observation& obs) const {
  if (action_kind_ != ActionValue::Kind::kDiscrete) {
    throw ContractViolation("teacher probabilities are defined for discrete actions only");
  }
  std::vector<double> p(action_count_, epsilon_ / static_cast<double>(action_count_));
  p[base_->act(obs).index] += 1.0 - epsilon_;
  return p;
}

double TeacherPolicy::log_density(const Observation& obs, const ActionValue& action) const {
  if (action_kind_ == ActionValue::Kind::kDiscrete) {
    if (action.index >= action_count_) throw ContractViolation("teacher log_density: action out of range");
    return std::log(probabilities(obs)[action.index]);
  }
  const ActionValue mean = base_->act(obs);
  double gauss = 0.0;
  for (std::size_t i = 0; i < action_dim_; ++i) {
    const double z = (action.vector[i] - mean.vector[i]) / sigma_;
    gauss += -0.5 * z * z - std::log(sigma_) - 0.5 * std::log(2.0 * std::numbers::pi);
  }
  const bool in_box = std::all_of(action.vector.begin(), action.vector.end(),
                                  [](double x) { return x >= -1.0 && x <= 1.0; });
  const double uniform = -static_cast<double>(action_dim_) * std::log(2.0);
  const double a = epsilon_ < 1.0 ? std::log1p(-epsilon_) + gauss : -INFINITY;
  const double b = epsilon_ > 0.0 && in_box ? std::log(epsilon_) + uniform : -INFINITY;
  return log_add(a, b);
}

double measure_success(const Environment& env, const TeacherPolicy& teacher, std::size_t rollouts,
                       const RandomStream& stream, bool deterministic) {
  if (rollouts == 0) throw ContractViolation("measure_success needs at least one rollout");
  auto local = env.clone();
  std::size_t successes = 0;
  for (std::size_t i = 0; i < rollouts; ++i) {
    RandomStream layout_stream = stream.derive(2 * i);
    RandomStream action_stream = stream.derive(2 * i + 1);
    Observation obs = local->reset(layout_stream);
    while (!local->done()) {
      const ActionValue a = deterministic ? teacher.mode(obs) : teacher.sample(obs, action_stream);
      StepResult r = local->step(a);
      if (r.success) ++successes;
      obs = std::move(r.observation);
    }
  }
  return static_cast<double>(successes) / static_cast<double>(rollouts);
}

TeacherPolicy make_teacher(const Environment& env, std::shared_ptr<const BaseController> base, TeacherTier tier,
                           double target_success, const RandomStream& stream, const CalibrationOptions& options) {
  if (!(target_success > 0.0 && target_success <= 1.0)) {
    throw ContractViolation("teacher target success must lie in (0, 1]");
  }
  TeacherPolicy teacher(std::move(base), env.spec(), 0.0, tier);
  const double base_success = measure_success(env, teacher, options.rollouts, stream);
  if (base_success <= target_success + options.tolerance) {
    if (base_success >= target_success - options.tolerance) return teacher;
    throw CalibrationFailed("base controller success " + std::to_string(base_success) + " is below target " +
                            std::to_string(target_success));
  }
  // Success falls as epsilon grows; keep [lo, hi] bracketing the target.
  double lo = 0.0;
  double hi = 1.0;
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double rate = measure_success(env, teacher.with_epsilon(mid), options.rollouts, stream);
    if (std::abs(rate - target_success) <= options.tolerance) return teacher.with_epsilon(mid);
    (rate > target_success ? lo : hi) = mid;
  }
  throw CalibrationFailed("teacher calibration did not reach " + std::to_string(target_success) + " within " +
                          std::to_string(options.max_iterations) + " bisection steps");
}

std::shared_ptr<const BaseController> default_controller(const Environment& env, double gamma) {
  const Environment* e = &env;
  if (const auto* shaped = dynamic_cast<const ShapedRewardWrapper*>(e)) e = &shaped->inner();
  if (dynamic_cast<const GridStackEnv*>(e)) return make_grid_optimal_controller(gamma);
  if (dynamic_cast<const PointStackEnv*>(e)) return make_point_scripted_controller();
  throw ContractViolation("no default teacher controller for environment '" + env.spec().id + "'");
}

TeacherPolicy make_teacher(const Environment& env, TeacherTier tier, double target_success,
                           const RandomStream& stream, const CalibrationOptions& options, double gamma) {
  return make_teacher(env, default_controller(env, gamma), tier, target_success, stream, options);
}

}  // namespace pft::envs
