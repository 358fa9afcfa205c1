#include <cmath>
#include <vector>

#include "doctest.h"
#include "pft/approx/policy.hpp"
#include "pft/approx/q_function.hpp"
#include "pft/critic/critic.hpp"
#include "support/finite_difference.hpp"

using namespace pft;
using namespace pft::approx;
using namespace pft::critic;
using pft::testing::numeric_gradient;
using pft::testing::relative_error;

namespace {

// Chain 0 -> 1 -> 2 -> success. Action 1 moves right, action 0 stays.
constexpr std::size_t kChain = 3;

Transition chain_step(std::size_t s, std::size_t a) {
  Transition t;
  t.state = Observation::discrete(s);
  t.action = ActionValue::discrete(a);
  const std::size_t next = a == 1 ? s + 1 : s;
  t.terminal = next == kChain;
  t.reward = t.terminal ? 1.0 : 0.0;
  t.next_state = Observation::discrete(t.terminal ? s : next);
  return t;
}

// Q^pi by iterating the Bellman expectation equation to machine precision.
std::vector<double> chain_q(const ParametricPolicy& pi, double gamma) {
  std::vector<double> q(kChain * 2, 0.0);
  for (int it = 0; it < 5000; ++it) {
    std::vector<double> next = q;
    for (std::size_t s = 0; s < kChain; ++s) {
      for (std::size_t a = 0; a < 2; ++a) {
        const auto t = chain_step(s, a);
        double v = 0;
        if (!t.terminal) {
          const auto p = pi.probabilities(t.next_state);
          v = p[0] * q[t.next_state.index * 2] + p[1] * q[t.next_state.index * 2 + 1];
        }
        next[s * 2 + a] = t.reward + gamma * v;
      }
    }
    q = next;
  }
  return q;
}

ParametricPolicy chain_policy() {
  auto pi = ParametricPolicy::categorical(Trunk::tabular(kChain, 2), 2);
  const double logits[] = {0.3, -0.2, 1.0, 0.5, -0.4, 0.8};
  std::copy(std::begin(logits), std::end(logits), pi.parameters().begin());
  return pi;
}

}  // namespace

TEST_CASE("categorical projection splits mass between neighbouring atoms") {
  const Support two{2, 0.0, 1.0};
  const double v = 0.3, p = 1.0;
  const auto out = project_onto_support(two, std::span(&v, 1), std::span(&p, 1));
  CHECK(out[0] == doctest::Approx(0.7));
  CHECK(out[1] == doctest::Approx(0.3));

  const double above = 1.7, below = -2.0;
  CHECK(project_onto_support(two, std::span(&above, 1), std::span(&p, 1))[1] == 1.0);
  CHECK(project_onto_support(two, std::span(&below, 1), std::span(&p, 1))[0] == 1.0);
}

TEST_CASE("projection conserves mass and keeps in-range means") {
  const Support support{51, 0.0, 1.0};
  RandomStream s(1, 0);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> values(7), probs(7);
    double total = 0, mean = 0;
    for (auto& x : values) x = s.uniform(0.0, 1.0);
    for (auto& w : probs) total += (w = s.uniform());
    for (std::size_t i = 0; i < 7; ++i) mean += (probs[i] /= total) * values[i];
    const auto out = project_onto_support(support, values, probs);
    double mass = 0, projected = 0;
    for (std::size_t i = 0; i < out.size(); ++i) {
      CHECK(out[i] >= 0.0);
      mass += out[i];
      projected += out[i] * support.atom(i);
    }
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(projected - mean) <= support.spacing());
    CHECK(projected == doctest::Approx(mean).epsilon(1e-9));
  }
}

TEST_CASE("TD gradients match finite differences with targets held fixed") {
  RandomStream s(2, 0);
  for (QHead head : {QHead::kScalar, QHead::kDistributional}) {
    const Support support{21, 0.0, 1.0};
    const std::size_t width = head == QHead::kScalar ? 1 : support.n_atoms;
    auto q = QFunction::continuous(Trunk::mlp(4 + 2, {8}, width), 2, head, support);
    for (double& p : q.parameters()) p = s.uniform(-0.5, 0.5);
    auto pi = ParametricPolicy::gaussian(Trunk::mlp(4, {6}, 4), 2);
    for (double& p : pi.parameters()) p = s.uniform(-0.5, 0.5);
    CriticLearner learner(q, {});
    // Move the online net away from the target so the two differ.
    for (double& p : learner.mutable_online().parameters()) p += s.uniform(-0.1, 0.1);
    std::vector<Transition> data;
    for (int i = 0; i < 5; ++i) {
      Transition t;
      for (auto* o : {&t.state, &t.next_state}) {
        std::vector<double> f(4);
        for (double& x : f) x = s.uniform(-1, 1);
        *o = Observation::continuous(f);
      }
      t.action = ActionValue::continuous({s.uniform(-1, 1), s.uniform(-1, 1)});
      t.reward = i == 2 ? 1.0 : 0.0;
      t.terminal = i == 2;
      data.push_back(t);
    }
    std::vector<TransitionRef> batch(data.begin(), data.end());
    const RandomStream seed(9, 9);
    RandomStream r1 = seed;
    const auto g = learner.td_gradient(batch, pi, r1);
    const auto fd = numeric_gradient(learner.mutable_online().parameters(), [&] {
      RandomStream r = seed;
      return learner.td_gradient(batch, pi, r).loss;
    });
    CHECK(relative_error(g.gradient, fd) < 1e-6);
  }
}

TEST_CASE("scalar TD converges to the exact Q of a fixed policy on a chain") {
  const double gamma = 0.9;
  const auto pi = chain_policy();
  const auto exact = chain_q(pi, gamma);
  auto q = QFunction::discrete(Trunk::tabular(kChain, 2), 2, QHead::kScalar);
  CriticConfig cfg;
  cfg.gamma = gamma;
  cfg.target_period = 10;
  cfg.optimizer.learning_rate = 0.02;
  CriticLearner learner(q, cfg);
  std::vector<Transition> data;
  for (std::size_t st = 0; st < kChain; ++st) {
    for (std::size_t a = 0; a < 2; ++a) data.push_back(chain_step(st, a));
  }
  std::vector<TransitionRef> batch(data.begin(), data.end());
  RandomStream s(3, 0);
  for (int step = 0; step < 20000; ++step) learner.update(batch, pi, s);
  for (std::size_t st = 0; st < kChain; ++st) {
    for (std::size_t a = 0; a < 2; ++a) {
      CHECK(learner.online().value(Observation::discrete(st), ActionValue::discrete(a)) ==
            doctest::Approx(exact[st * 2 + a]).epsilon(1e-3));
    }
  }
}

TEST_CASE("distributional TD mean converges to the exact Q of a fixed policy") {
  const double gamma = 0.9;
  const auto pi = chain_policy();
  const auto exact = chain_q(pi, gamma);
  auto q = QFunction::discrete(Trunk::tabular(kChain, 2 * 51), 2, QHead::kDistributional);
  CriticConfig cfg;
  cfg.gamma = gamma;
  cfg.target_period = 10;
  cfg.optimizer.learning_rate = 0.02;
  CriticLearner learner(q, cfg);
  std::vector<Transition> data;
  for (std::size_t st = 0; st < kChain; ++st) {
    for (std::size_t a = 0; a < 2; ++a) data.push_back(chain_step(st, a));
  }
  std::vector<TransitionRef> batch(data.begin(), data.end());
  RandomStream s(4, 0);
  for (int step = 0; step < 20000; ++step) learner.update(batch, pi, s);
  for (std::size_t st = 0; st < kChain; ++st) {
    for (std::size_t a = 0; a < 2; ++a) {
      CHECK(learner.online().value(Observation::discrete(st), ActionValue::discrete(a)) ==
            doctest::Approx(exact[st * 2 + a]).epsilon(5e-3));
    }
  }
}

TEST_CASE("terminal transitions do not bootstrap") {
  auto q = QFunction::discrete(Trunk::tabular(kChain, 2), 2, QHead::kScalar);
  for (double& p : q.parameters()) p = 5.0;
  CriticLearner learner(q, {});
  RandomStream s(5, 0);
  const auto pi = chain_policy();
  CHECK(learner.scalar_target(chain_step(2, 1), pi, s) == 1.0);
  CHECK(learner.scalar_target(chain_step(0, 1), pi, s) == doctest::Approx(0.98 * 5.0));
  const auto dist = learner.distributional_target(chain_step(2, 1), pi, s);
  CHECK(dist.back() == 1.0);
}

TEST_CASE("target network syncs exactly every period") {
  auto q = QFunction::discrete(Trunk::tabular(kChain, 2), 2, QHead::kScalar);
  CriticConfig cfg;
  cfg.target_period = 4;
  CriticLearner learner(q, cfg);
  std::vector<Transition> data{chain_step(0, 1), chain_step(2, 1)};
  std::vector<TransitionRef> batch(data.begin(), data.end());
  const auto pi = chain_policy();
  RandomStream s(6, 0);
  const std::vector<double> initial(learner.target().parameters().begin(), learner.target().parameters().end());
  for (int step = 1; step <= 8; ++step) {
    learner.update(batch, pi, s);
    const bool same = std::equal(learner.target().parameters().begin(), learner.target().parameters().end(),
                                 learner.online().parameters().begin());
    CHECK(same == (step % 4 == 0));
    if (step < 4) {
      CHECK(std::equal(initial.begin(), initial.end(), learner.target().parameters().begin()));
    }
  }
  CHECK(learner.gradient_steps() == 8);
}

TEST_CASE("advantage baseline: exact sum for discrete, sample mean otherwise") {
  auto q = QFunction::discrete(Trunk::tabular(kChain, 2), 2, QHead::kScalar);
  const double vals[] = {0.2, 0.6, 0.1, 0.9, 0.5, 0.5};
  std::copy(std::begin(vals), std::end(vals), q.parameters().begin());
  const auto pi = chain_policy();
  RandomStream s(7, 0);
  const auto st = Observation::discrete(1);
  const auto p = pi.probabilities(st);
  const auto exact = advantage(q, st, ActionValue::discrete(1), pi, std::nullopt, s);
  CHECK(exact.baseline == doctest::Approx(p[0] * 0.1 + p[1] * 0.9));
  CHECK(exact.value == doctest::Approx(0.9 - exact.baseline));
  CHECK(exact.m_samples == 0);

  // Sampled baseline: unbiased with variance Var_pi[Q] / m.
  const std::size_t m = 50;
  const double var = p[0] * p[1] * 0.8 * 0.8;
  double mean = 0;
  const int reps = 2000;
  for (int r = 0; r < reps; ++r) mean += advantage(q, st, ActionValue::discrete(1), pi, m, s).baseline;
  mean /= reps;
  CHECK(std::abs(mean - exact.baseline) < 5 * std::sqrt(var / m / reps));
}
