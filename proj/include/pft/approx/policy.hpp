#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pft/approx/gradient.hpp"
#include "pft/approx/trunk.hpp"
#include "pft/core/random.hpp"
#include "pft/core/types.hpp"

namespace pft::approx {

enum class PolicyHead { kCategorical, kGaussian };

// One term of a weighted log-likelihood objective.
struct WeightedExample {
  std::reference_wrapper<const Observation> state;
  ActionValue action;
  double weight = 0.0;
};

// Bounds of the Gaussian head's standard deviation.
inline constexpr double kMinStddev = 1e-3;
inline constexpr double kMaxStddev = 1.0;
// Standard deviation at a zero raw_scale output.
inline constexpr double kInitialStddev = 0.5;

// pi_theta(a|s). Categorical heads read logits from the trunk. Gaussian heads
// read 2*d raw outputs: mean = tanh(raw_mean) and
// log(stddev) = log(kMinStddev) + log(kMaxStddev/kMinStddev) * sigmoid(raw_scale + c),
// with c chosen so that raw_scale = 0 gives kInitialStddev.
class ParametricPolicy {
 public:
  static ParametricPolicy categorical(Trunk trunk, std::size_t action_count);
  static ParametricPolicy gaussian(Trunk trunk, std::size_t action_dim);

  PolicyHead head() const { return head_; }
  const Trunk& trunk() const { return trunk_; }
  std::size_t action_count() const { return action_count_; }
  std::size_t action_dim() const { return action_dim_; }
  std::string architecture() const;

  std::span<const double> parameters() const { return params_; }
  std::span<double> parameters() { return params_; }
  void initialize(RandomStream& stream) { trunk_.initialize(params_, stream); }

  std::vector<double> probabilities(const Observation& state) const;
  struct Gaussian {
    std::vector<double> mean;
    std::vector<double> stddev;
  };
  Gaussian gaussian(const Observation& state) const;

  double log_density(const Observation& state, const ActionValue& action) const;
  ActionValue sample(const Observation& state, RandomStream& stream) const;
  ActionValue mode(const Observation& state) const;

  // loss = -(1/B) sum_i w_i log pi(a_i|s_i) and its parameter gradient.
  GradientReport weighted_nll_gradient(std::span<const WeightedExample> batch) const;
  // Adds scale * sum_i (-w_i log pi(a_i|s_i)) into grad; returns that sum times scale.
  double accumulate_weighted_nll(std::span<const WeightedExample> batch, double scale, GradientReport& grad) const;

  // KL(this || reference) at one state, with closed forms for both heads.
  double kl_divergence(const Observation& state, const ParametricPolicy& reference) const;
  // Adds scale * grad KL(this || reference) at `state`; returns scale * KL.
  double accumulate_kl(const Observation& state, const ParametricPolicy& reference, double scale,
                       GradientReport& grad) const;

  GradientReport make_gradient() const { return trunk_.make_gradient(); }

 private:
  ParametricPolicy(PolicyHead head, Trunk trunk, std::size_t action_count, std::size_t action_dim);

  TrunkInput input_for(const Observation& state) const;
  // Raw head outputs split into (mean, log-stddev) plus squashing derivatives.
  struct GaussianRaw {
    std::vector<double> mean, log_std, dmean_draw, dlogstd_draw;
  };
  GaussianRaw gaussian_raw(std::span<const double> out) const;

  PolicyHead head_;
  Trunk trunk_;
  std::size_t action_count_ = 0;
  std::size_t action_dim_ = 0;
  std::vector<double> params_;
};

// Numerically stable softmax of logits.
std::vector<double> softmax(std::span<const double> logits);

}  // namespace pft::approx
