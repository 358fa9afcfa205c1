#pragma once

#include <cstddef>
#include <vector>

#include "pft/approx/policy.hpp"
#include "pft/approx/q_function.hpp"
#include "pft/envs/environment.hpp"

namespace pft::approx {

inline const std::vector<std::size_t> kDefaultHidden{64, 64};

// Tabular categorical policy for discrete-state envs, otherwise an MLP with
// a categorical or Gaussian head matching the action space.
ParametricPolicy make_policy(const envs::EnvSpec& spec, const std::vector<std::size_t>& hidden = kDefaultHidden);
QFunction make_q_function(const envs::EnvSpec& spec, QHead head, Support support = {},
                          const std::vector<std::size_t>& hidden = kDefaultHidden);

}  // namespace pft::approx
