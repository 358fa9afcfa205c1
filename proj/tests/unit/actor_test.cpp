#include <cmath>
#include <vector>

#include "doctest.h"
#include "pft/actor/actor.hpp"
#include "pft/core/error.hpp"
#include "pft/envs/grid_stack.hpp"
#include "support/finite_difference.hpp"

using namespace pft;
using namespace pft::actor;
using namespace pft::approx;
using pft::testing::numeric_gradient;
using pft::testing::relative_error;

namespace {

std::vector<Transition> tabular_batch(RandomStream& s, std::size_t states, std::size_t actions, std::size_t n) {
  std::vector<Transition> out;
  for (std::size_t i = 0; i < n; ++i) {
    Transition t;
    t.state = Observation::discrete(s.uniform_index(states));
    t.next_state = Observation::discrete(s.uniform_index(states));
    t.action = ActionValue::discrete(s.uniform_index(actions));
    out.push_back(t);
  }
  return out;
}

QFunction random_q(RandomStream& s, std::size_t states, std::size_t actions) {
  auto q = QFunction::discrete(Trunk::tabular(states, actions), actions, QHead::kScalar);
  for (double& p : q.parameters()) p = s.uniform();
  return q;
}

struct FirstAction final : envs::BaseController {
  ActionValue act(const Observation&) const override { return ActionValue::discrete(0); }
};

envs::EnvSpec small_spec(std::size_t states, std::size_t actions) {
  envs::EnvSpec spec;
  spec.state_count = states;
  spec.action_count = actions;
  return spec;
}

}  // namespace

TEST_CASE("prior specs validate and describe themselves") {
  CHECK_THROWS_AS(PriorSpec::mixture({{PriorKind::kTeacher, 0.5}}), ContractViolation);
  CHECK_THROWS_AS(PriorSpec::mixture({{PriorKind::kTeacher, -0.5}, {PriorKind::kCurrentPolicy, 1.5}}),
                  ContractViolation);
  const auto r = PriorSpec::logged_teacher(0.75);
  CHECK(r.weight_of(PriorKind::kTeacher) == 0.75);
  CHECK_FALSE(r.purely_logged());
  CHECK(PriorSpec::logged_teacher(0.0).purely_logged());
  CHECK_FALSE(PriorSpec::policy_teacher(0.0).uses(PriorKind::kTeacher));
  CHECK(PriorSpec::policy_teacher(0.1).describe() == "0.9*policy+0.1*teacher");
}

TEST_CASE("a purely logged prior yields the stored action without consuming randomness") {
  RandomStream s(1, 0);
  auto policy = ParametricPolicy::categorical(Trunk::tabular(4, 3), 3);
  Transition t;
  t.state = Observation::discrete(2);
  t.action = ActionValue::discrete(1);
  RandomStream a(2, 0), b(2, 0);
  const auto draws = draw_prior_actions(PriorSpec::logged_teacher(0.0), t, policy, nullptr, 10, a);
  REQUIRE(draws.size() == 1);
  CHECK(draws[0].action == t.action);
  CHECK(draws[0].origin == SampleOrigin::kLogged);
  CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("a degenerate mixture replays its single component draw for draw") {
  auto policy = ParametricPolicy::categorical(Trunk::tabular(4, 3), 3);
  RandomStream init(3, 0);
  for (double& p : policy.parameters()) p = init.uniform(-1, 1);
  Transition t;
  t.state = Observation::discrete(3);
  RandomStream a(4, 0), b(4, 0);
  const auto mixed = draw_prior_actions(PriorSpec::policy_teacher(0.0), t, policy, nullptr, 25, a);
  const auto plain = draw_prior_actions(PriorSpec::single(PriorKind::kCurrentPolicy), t, policy, nullptr, 25, b);
  REQUIRE(mixed.size() == 25);
  for (std::size_t i = 0; i < 25; ++i) CHECK(mixed[i].action == plain[i].action);
  CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("mixture draws follow component weights and tag their origin") {
  auto policy = ParametricPolicy::categorical(Trunk::tabular(4, 3), 3);
  const envs::TeacherPolicy teacher(std::make_shared<FirstAction>(), small_spec(4, 3), 0.0);
  Transition t;
  t.state = Observation::discrete(0);
  t.action = ActionValue::discrete(2);
  RandomStream s(5, 0);
  const auto draws = draw_prior_actions(PriorSpec::logged_teacher(0.3), t, policy, &teacher, 20000, s);
  std::size_t from_teacher = 0;
  for (const auto& d : draws) {
    if (d.origin == SampleOrigin::kTeacher) {
      ++from_teacher;
      CHECK(d.action.index == 0);
    } else {
      CHECK(d.origin == SampleOrigin::kLogged);
      CHECK(d.action.index == 2);
    }
  }
  const double sd = std::sqrt(0.3 * 0.7 / 20000);
  CHECK(std::abs(double(from_teacher) / 20000 - 0.3) < 5 * sd);
  CHECK_THROWS_AS(draw_prior_actions(PriorSpec::logged_teacher(0.3), t, policy, nullptr, 5, s), ContractViolation);
}

TEST_CASE("softmax weights average to one and advantage weights clip") {
  const std::vector<double> q{0.1, 0.5, -0.3, 0.5};
  const auto w = softmax_weights(q, 0.2);
  double mean = 0;
  for (double x : w) mean += x / 4;
  CHECK(mean == doctest::Approx(1.0));
  CHECK(w[1] == doctest::Approx(w[3]));
  CHECK(w[1] / w[0] == doctest::Approx(std::exp(0.4 / 0.2)));
  // Huge values must not overflow.
  const auto big = softmax_weights(std::vector<double>{1000.0, 0.0}, 1e-3);
  CHECK(big[0] == doctest::Approx(2.0));
  CHECK(big[1] == 0.0);

  CHECK(advantage_weight(0.0, 1.0, 20.0) == 1.0);
  CHECK(advantage_weight(10.0, 1.0, 20.0) == 20.0);
  CHECK(advantage_weight(10.0, 1.0, std::nullopt) == doctest::Approx(std::exp(10.0)));
  CHECK(advantage_weight(-1.0, 0.5, 20.0) == doctest::Approx(std::exp(-2.0)));
}

TEST_CASE("the temperature dual's derivative is epsilon minus the sample KL") {
  RandomStream s(6, 0);
  std::vector<std::vector<double>> q(8);
  for (auto& row : q) {
    row.resize(10);
    for (double& x : row) x = s.uniform();
  }
  const double eps = 0.1;
  for (double eta : {0.02, 0.1, 0.5, 2.0}) {
    const double h = 1e-6 * eta;
    const double d = (temperature_dual(q, eps, eta + h) - temperature_dual(q, eps, eta - h)) / (2 * h);
    CHECK(d == doctest::Approx(eps - mean_sample_kl(q, eta)).epsilon(1e-5));
  }
  // The solver's eta minimizes the dual over a grid.
  const auto sol = solve_temperature(q, eps);
  const double best = temperature_dual(q, eps, sol.eta);
  for (double f : {0.5, 0.8, 0.95, 1.05, 1.25, 2.0}) CHECK(temperature_dual(q, eps, sol.eta * f) >= best - 1e-12);
}

TEST_CASE("temperature solver edge cases") {
  const std::vector<std::vector<double>> flat{{0.3, 0.3, 0.3}, {1.0, 1.0}};
  const auto sol = solve_temperature(flat, 0.1);
  CHECK(sol.degenerate);
  CHECK(sol.eta == 1.0);
  // A tiny gap cannot reach a large KL bound: the maximum is log(n) at eta -> 0.
  const std::vector<std::vector<double>> two{{0.0, 1.0}};
  const auto capped = solve_temperature(two, 5.0);
  CHECK(capped.eta == 1e-6);
  CHECK(capped.mean_kl <= 5.0);
  CHECK_THROWS_AS(solve_temperature(two, 0.0), ContractViolation);
}

TEST_CASE("unit weights on logged data give exactly the behavior-cloning loss") {
  RandomStream s(7, 0);
  auto policy = ParametricPolicy::categorical(Trunk::tabular(6, 4), 4);
  for (double& p : policy.parameters()) p = s.uniform(-1, 1);
  const auto data = tabular_batch(s, 6, 4, 32);
  std::vector<critic::TransitionRef> batch(data.begin(), data.end());
  ImprovementConfig cfg;
  const auto weighted = build_weighted_batch(cfg, batch, policy, nullptr, nullptr, s);
  auto grad = policy.make_gradient();
  const auto report = accumulate_improvement(cfg, weighted, batch, policy, nullptr, grad);
  double bc = 0;
  for (const auto& t : data) bc -= policy.log_density(t.state, t.action);
  bc /= double(data.size());
  CHECK(std::abs(report.loss - bc) < 1e-12);
  CHECK(report.origin_counts[0] == 32);
}

TEST_CASE("improvement gradient with trust region matches finite differences") {
  RandomStream s(8, 0);
  for (Normalization norm : {Normalization::kSoftmaxZ, Normalization::kAdvantageBaseline}) {
    auto policy = ParametricPolicy::categorical(Trunk::tabular(5, 3), 3);
    for (double& p : policy.parameters()) p = s.uniform(-1, 1);
    auto reference = policy;
    for (double& p : reference.parameters()) p += s.uniform(-0.3, 0.3);
    const auto q = random_q(s, 5, 3);
    const auto data = tabular_batch(s, 5, 3, 6);
    std::vector<critic::TransitionRef> batch(data.begin(), data.end());
    ImprovementConfig cfg;
    cfg.normalization = norm;
    cfg.prior = PriorSpec::single(PriorKind::kCurrentPolicy);
    cfg.temperature = 0.3;
    cfg.trust_region = 0.5;
    const auto weighted = build_weighted_batch(cfg, batch, policy, nullptr, &q, s);
    auto grad = policy.make_gradient();
    accumulate_improvement(cfg, weighted, batch, policy, &reference, grad);
    const auto fd = numeric_gradient(policy.parameters(), [&] {
      auto g = policy.make_gradient();
      return accumulate_improvement(cfg, weighted, batch, policy, &reference, g).loss;
    });
    CHECK(relative_error(grad.gradient, fd) < 1e-6);
  }
}

TEST_CASE("beta = 1 with a huge temperature approaches unit teacher weights") {
  RandomStream s(9, 0);
  auto policy = ParametricPolicy::categorical(Trunk::tabular(5, 3), 3);
  const auto q = random_q(s, 5, 3);
  const envs::TeacherPolicy teacher(std::make_shared<FirstAction>(), small_spec(5, 3), 0.5);
  const auto data = tabular_batch(s, 5, 3, 16);
  std::vector<critic::TransitionRef> batch(data.begin(), data.end());
  ImprovementConfig cfg;
  cfg.normalization = Normalization::kAdvantageBaseline;
  cfg.prior = PriorSpec::logged_teacher(1.0);
  cfg.temperature = 1e6;
  const auto weighted = build_weighted_batch(cfg, batch, policy, &teacher, &q, s);
  CHECK(weighted.samples.size() == 16 * 10);
  for (const auto& w : weighted.samples) {
    CHECK(w.origin == SampleOrigin::kTeacher);
    CHECK(std::abs(w.weight - 1.0) < 1e-3);
  }
}

TEST_CASE("solved temperature keeps every batch's sample KL within the bound") {
  RandomStream s(10, 0);
  auto policy = ParametricPolicy::categorical(Trunk::tabular(20, 6), 6);
  for (double& p : policy.parameters()) p = s.uniform(-1, 1);
  for (int trial = 0; trial < 20; ++trial) {
    const auto q = random_q(s, 20, 6);
    const auto data = tabular_batch(s, 20, 6, 64);
    std::vector<critic::TransitionRef> batch(data.begin(), data.end());
    ImprovementConfig cfg;
    cfg.normalization = Normalization::kSoftmaxZ;
    cfg.prior = PriorSpec::single(PriorKind::kCurrentPolicy);
    cfg.solve_temperature = true;
    cfg.kl_bound = 0.05;
    const auto weighted = build_weighted_batch(cfg, batch, policy, nullptr, &q, s);
    CHECK(weighted.mean_kl <= 0.05 + 1e-9);
    CHECK(weighted.mean_kl >= 0.05 - 1e-3);
    // Per-state weights average to one.
    for (std::size_t i = 0; i < batch.size(); ++i) {
      double sum = 0;
      for (std::size_t k = 0; k < 10; ++k) sum += weighted.samples[i * 10 + k].weight;
      CHECK(sum / 10 == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("policy improvement on a bandit moves mass to the best action") {
  // One state, three actions with known values; both weightings should make
  // the policy greedy given enough steps.
  for (Normalization norm : {Normalization::kSoftmaxZ, Normalization::kAdvantageBaseline}) {
    auto policy = ParametricPolicy::categorical(Trunk::tabular(1, 3), 3);
    auto q = QFunction::discrete(Trunk::tabular(1, 3), 3, QHead::kScalar);
    q.parameters()[0] = 0.2;
    q.parameters()[1] = 0.9;
    q.parameters()[2] = 0.5;
    ImprovementConfig cfg;
    cfg.normalization = norm;
    cfg.prior = PriorSpec::single(PriorKind::kCurrentPolicy);
    cfg.temperature = norm == Normalization::kSoftmaxZ ? 0.05 : 0.01;
    PolicyImprover improver(cfg, {0.05}, policy);
    Transition t;
    t.state = Observation::discrete(0);
    std::vector<critic::TransitionRef> batch(8, std::cref(t));
    RandomStream s(11, 0);
    for (int step = 0; step < 1500; ++step) improver.step(batch, policy, nullptr, &q, nullptr, s);
    CHECK(policy.probabilities(t.state)[1] > 0.99);
  }
}
