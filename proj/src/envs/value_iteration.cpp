#include "pft/envs/value_iteration.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pft/core/error.hpp"

namespace pft::envs {

namespace {

constexpr std::size_t kStates = GridStackEnv::kLayoutStates;
constexpr std::size_t kActions = GridStackEnv::kActionCount;

struct Edge {
  std::size_t next = 0;
  double reward = 0.0;
  bool terminal = false;
};

// Deterministic successor table for one layout.
std::vector<Edge> build_edges(std::size_t blue, std::vector<bool>& valid) {
  std::vector<Edge> edges(kStates * kActions);
  valid.assign(kStates, false);
  for (std::size_t agent = 0; agent < GridStackEnv::kCells; ++agent) {
    for (std::size_t red = 0; red <= GridStackEnv::kCells; ++red) {
      const std::size_t s = GridStackEnv::layout_index(agent, red);
      valid[s] = red != blue;
      const GridStackEnv::State state{blue, agent, red};
      for (std::size_t a = 0; a < kActions; ++a) {
        const auto out = GridStackEnv::transition(state, a);
        edges[s * kActions + a] = {GridStackEnv::layout_index(out.next.agent, out.next.red), out.reward,
                                   out.success};
      }
    }
  }
  return edges;
}

double backup(const Edge& e, double gamma, std::span<const double> values) {
  return e.reward + (e.terminal ? 0.0 : gamma * values[e.next]);
}

}  // namespace

std::vector<std::size_t> GridSolution::optimal_actions(std::size_t layout_state, double tol) const {
  double best = q_value(layout_state, 0);
  for (std::size_t a = 1; a < kActions; ++a) best = std::max(best, q_value(layout_state, a));
  std::vector<std::size_t> out;
  for (std::size_t a = 0; a < kActions; ++a) {
    if (q_value(layout_state, a) >= best - tol) out.push_back(a);
  }
  return out;
}

GridSolution solve_optimal(std::size_t blue, double gamma, double tolerance) {
  if (blue >= GridStackEnv::kCells) throw ContractViolation("blue cell out of range");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ContractViolation("gamma must lie in [0, 1)");

  GridSolution sol;
  sol.blue = blue;
  sol.gamma = gamma;
  const auto edges = build_edges(blue, sol.valid);
  sol.values.assign(kStates, 0.0);
  sol.q.assign(kStates * kActions, 0.0);
  sol.greedy.assign(kStates, 0);

  for (int iter = 0; iter < 100000; ++iter) {
    const auto next = bellman_optimality_backup(blue, gamma, sol.values);
    double delta = 0.0;
    for (std::size_t s = 0; s < kStates; ++s) delta = std::max(delta, std::abs(next[s] - sol.values[s]));
    sol.values = next;
    if (delta < tolerance) break;
  }

  for (std::size_t s = 0; s < kStates; ++s) {
    if (!sol.valid[s]) continue;
    std::size_t best = 0;
    for (std::size_t a = 0; a < kActions; ++a) {
      const double q = backup(edges[s * kActions + a], gamma, sol.values);
      sol.q[s * kActions + a] = q;
      if (q > sol.q[s * kActions + best] + 1e-12) best = a;
    }
    sol.greedy[s] = best;
    if (!(sol.values[s] > 0.0)) {
      throw ContractViolation("unsolvable grid layout (blue=" + std::to_string(blue) + ")");
    }
  }
  const auto check = bellman_optimality_backup(blue, gamma, sol.values);
  for (std::size_t s = 0; s < kStates; ++s) {
    sol.residual = std::max(sol.residual, std::abs(check[s] - sol.values[s]));
  }
  return sol;
}

GridSolution solve_optimal(const GridStackEnv::Layout& layout, double gamma, double tolerance) {
  return solve_optimal(layout.blue, gamma, tolerance);
}

std::vector<double> bellman_optimality_backup(std::size_t blue, double gamma, std::span<const double> values) {
  std::vector<bool> valid;
  const auto edges = build_edges(blue, valid);
  std::vector<double> out(kStates, 0.0);
  for (std::size_t s = 0; s < kStates; ++s) {
    if (!valid[s]) continue;
    double best = -1.0;
    for (std::size_t a = 0; a < kActions; ++a) best = std::max(best, backup(edges[s * kActions + a], gamma, values));
    out[s] = best;
  }
  return out;
}

std::vector<double> evaluate_policy_q(std::size_t blue, double gamma, const LayoutPolicy& policy,
                                      double tolerance) {
  std::vector<bool> valid;
  const auto edges = build_edges(blue, valid);
  std::vector<std::vector<double>> probs(kStates);
  for (std::size_t s = 0; s < kStates; ++s) {
    if (valid[s]) probs[s] = policy(s);
  }
  std::vector<double> v(kStates, 0.0), q(kStates * kActions, 0.0);
  for (int iter = 0; iter < 1000000; ++iter) {
    double delta = 0.0;
    for (std::size_t s = 0; s < kStates; ++s) {
      if (!valid[s]) continue;
      double vs = 0.0;
      for (std::size_t a = 0; a < kActions; ++a) {
        q[s * kActions + a] = backup(edges[s * kActions + a], gamma, v);
        vs += probs[s][a] * q[s * kActions + a];
      }
      delta = std::max(delta, std::abs(vs - v[s]));
      v[s] = vs;
    }
    if (delta < tolerance) break;
  }
  return q;
}

}  // namespace pft::envs
