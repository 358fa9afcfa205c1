#include <cmath>
#include <vector>

#include "doctest.h"
#include "pft/core/error.hpp"
#include "pft/envs/grid_stack.hpp"
#include "pft/envs/point_stack.hpp"
#include "pft/envs/teacher.hpp"

using namespace pft;
using namespace pft::envs;

TEST_CASE("grid teacher action distribution") {
  GridStackEnv env;
  const TeacherPolicy teacher(make_grid_optimal_controller(0.98), env.spec(), 0.3);
  RandomStream s(1, 0);
  const auto obs = env.reset(s);
  const auto p = teacher.probabilities(obs);
  double total = 0;
  for (double x : p) total += x;
  CHECK(total == doctest::Approx(1.0));
  const auto best = teacher.mode(obs).index;
  CHECK(p[best] == doctest::Approx(0.7 + 0.05));
  for (std::size_t a = 0; a < 6; ++a) CHECK(std::exp(teacher.log_density(obs, ActionValue::discrete(a))) ==
                                            doctest::Approx(p[a]));

  std::vector<int> counts(6, 0);
  const int n = 60000;
  for (int i = 0; i < n; ++i) ++counts[teacher.sample(obs, s).index];
  double chi2 = 0;
  for (std::size_t a = 0; a < 6; ++a) chi2 += (counts[a] - n * p[a]) * (counts[a] - n * p[a]) / (n * p[a]);
  CHECK(chi2 < 20.5);
}

TEST_CASE("continuous teacher density integrates to one") {
  PointStackEnv env;
  const TeacherPolicy teacher(make_point_scripted_controller(), env.spec(), 0.4);
  const auto obs = env.reset_to({{0.2, 0.3}, {0.25, 0.32}, {0.8, 0.8}});
  // Midpoint rule on [-1.5, 1.5]^3; cell edges fall on +-1 so the uniform
  // component is integrated exactly, and h = sigma / 4 for the Gaussian.
  const int cells = 120;
  const double h = 3.0 / cells;
  double total = 0;
  for (int i = 0; i < cells; ++i) {
    for (int j = 0; j < cells; ++j) {
      for (int k = 0; k < cells; ++k) {
        ActionValue a;
        a.kind = ActionValue::Kind::kContinuous;
        a.vector = {-1.5 + (i + 0.5) * h, -1.5 + (j + 0.5) * h, -1.5 + (k + 0.5) * h};
        total += std::exp(teacher.log_density(obs, a));
      }
    }
  }
  total *= h * h * h;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("teacher with zero epsilon is the base controller") {
  GridStackEnv env;
  auto base = make_grid_optimal_controller(0.98);
  const TeacherPolicy teacher(base, env.spec(), 0.0);
  RandomStream s(2, 0);
  for (int i = 0; i < 50; ++i) {
    const auto obs = env.reset(s);
    CHECK(teacher.sample(obs, s) == base->act(obs));
  }
  CHECK_THROWS_AS(TeacherPolicy(base, env.spec(), 1.5), ContractViolation);
}

TEST_CASE("measure_success is reproducible and consistent with a binomial model") {
  GridStackEnv env;
  const TeacherPolicy base(make_grid_optimal_controller(0.98), env.spec(), 0.0);
  CHECK(measure_success(env, base, 300, RandomStream(3, 0)) == 1.0);

  const auto noisy = base.with_epsilon(0.7);
  const double a = measure_success(env, noisy, 1000, RandomStream(4, 0));
  CHECK(a == measure_success(env, noisy, 1000, RandomStream(4, 0)));
  const double b = measure_success(env, noisy, 1000, RandomStream(5, 0));
  // Independent replications: the difference has sd sqrt(2 p (1-p) / n).
  const double sd = std::sqrt(2 * a * (1 - a) / 1000);
  CHECK(std::abs(a - b) < 4.5 * sd + 1e-9);
  CHECK(a > 0.2);
  CHECK(a < 0.95);
}

TEST_CASE("calibration returns a teacher near the target and rejects unreachable targets") {
  GridStackEnv env;
  CalibrationOptions opts;
  opts.rollouts = 600;
  opts.tolerance = 0.02;
  const auto teacher = make_teacher(env, TeacherTier::kGeneralization, 0.5, RandomStream(6, 0), opts);
  CHECK(teacher.epsilon() > 0.0);
  CHECK(teacher.tier() == TeacherTier::kGeneralization);
  CHECK(std::abs(measure_success(env, teacher, 600, RandomStream(6, 0)) - 0.5) <= 0.02);

  struct Idle final : BaseController {
    ActionValue act(const Observation&) const override { return ActionValue::discrete(GridStackEnv::kUp); }
  };
  CHECK_THROWS_AS(make_teacher(env, std::make_shared<Idle>(), TeacherTier::kMastery, 0.8, RandomStream(7, 0), opts),
                  CalibrationFailed);
  CHECK(parse_teacher_tier("mastery") == TeacherTier::kMastery);
  CHECK_THROWS_AS(parse_teacher_tier("expert"), ConfigError);
}

TEST_CASE("scripted point controller solves the point task") {
  PointStackEnv env;
  const TeacherPolicy teacher(make_point_scripted_controller(), env.spec(), 0.0);
  CHECK(measure_success(env, teacher, 200, RandomStream(8, 0), true) == 1.0);
}
