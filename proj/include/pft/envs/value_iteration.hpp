#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "pft/envs/grid_stack.hpp"

namespace pft::envs {

// Exact dynamic-programming solution of one grid layout. Tables are indexed
// by GridStackEnv::layout_index(agent, red); states with the red block on the
// blue cell are unreachable and flagged invalid.
struct GridSolution {
  std::size_t blue = 0;
  double gamma = 0.0;
  std::vector<double> values;       // 650
  std::vector<double> q;            // 650 x 6, row-major
  std::vector<std::size_t> greedy;  // 650
  std::vector<bool> valid;          // 650
  double residual = 0.0;            // |V - TV|_inf at return

  double q_value(std::size_t layout_state, std::size_t action) const {
    return q[layout_state * GridStackEnv::kActionCount + action];
  }
  // Actions whose value is within tol of the best one.
  std::vector<std::size_t> optimal_actions(std::size_t layout_state, double tol = 1e-12) const;
};

// Value iteration to a sup-norm residual below `tolerance`. Throws
// ContractViolation for an unsolvable layout (some valid state with zero value).
GridSolution solve_optimal(std::size_t blue, double gamma, double tolerance = 1e-12);
GridSolution solve_optimal(const GridStackEnv::Layout& layout, double gamma, double tolerance = 1e-12);

// Bellman backup of a value table (used to check the fixed point).
std::vector<double> bellman_optimality_backup(std::size_t blue, double gamma, std::span<const double> values);

// Exact Q^pi for a stationary policy on one layout: iterative policy
// evaluation to `tolerance`. policy(layout_state) returns 6 probabilities.
using LayoutPolicy = std::function<std::vector<double>(std::size_t layout_state)>;
std::vector<double> evaluate_policy_q(std::size_t blue, double gamma, const LayoutPolicy& policy,
                                      double tolerance = 1e-12);

}  // namespace pft::envs
