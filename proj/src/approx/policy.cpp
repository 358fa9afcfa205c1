#include "pft/approx/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pft/core/error.hpp"

namespace pft::approx {

namespace {

const double kLogMinStd = std::log(kMinStddev);
const double kLogStdRange = std::log(kMaxStddev) - std::log(kMinStddev);
const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);
// Added to raw_scale so that a zero output maps to kInitialStddev.
const double kScaleOffset = [] {
  const double s = (std::log(kInitialStddev) - kLogMinStd) / kLogStdRange;
  return std::log(s / (1.0 - s));
}();

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_sum_exp(std::span<const double> x) {
  const double m = *std::max_element(x.begin(), x.end());
  double s = 0.0;
  for (double v : x) s += std::exp(v - m);
  return m + std::log(s);
}

}  // namespace

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.begin(), logits.end());
  const double m = *std::max_element(p.begin(), p.end());
  double s = 0.0;
  for (double& v : p) {
    v = std::exp(v - m);
    s += v;
  }
  for (double& v : p) v /= s;
  return p;
}

ParametricPolicy::ParametricPolicy(PolicyHead head, Trunk trunk, std::size_t action_count, std::size_t action_dim)
    : head_(head),
      trunk_(std::move(trunk)),
      action_count_(action_count),
      action_dim_(action_dim),
      params_(trunk_.parameter_count(), 0.0) {}

ParametricPolicy ParametricPolicy::categorical(Trunk trunk, std::size_t action_count) {
  if (action_count == 0 || trunk.output_dim() != action_count) {
    throw ContractViolation("categorical policy: trunk must output one logit per action");
  }
  return ParametricPolicy(PolicyHead::kCategorical, std::move(trunk), action_count, 0);
}

ParametricPolicy ParametricPolicy::gaussian(Trunk trunk, std::size_t action_dim) {
  if (trunk.kind() != TrunkKind::kMlp) throw ContractViolation("gaussian policy needs a feature trunk");
  if (action_dim == 0 || trunk.output_dim() != 2 * action_dim) {
    throw ContractViolation("gaussian policy: trunk must output mean and scale per dimension");
  }
  return ParametricPolicy(PolicyHead::kGaussian, std::move(trunk), 0, action_dim);
}

std::string ParametricPolicy::architecture() const {
  return std::string(head_ == PolicyHead::kCategorical ? "categorical" : "gaussian") + "/" + trunk_.describe();
}

TrunkInput ParametricPolicy::input_for(const Observation& state) const {
  if (trunk_.kind() == TrunkKind::kTabular) {
    if (!state.is_discrete()) throw ContractViolation("tabular policy needs discrete observations");
    return {state.index, {}};
  }
  if (state.is_discrete()) throw ContractViolation("mlp policy needs feature observations");
  return {0, state.features};
}

ParametricPolicy::GaussianRaw ParametricPolicy::gaussian_raw(std::span<const double> out) const {
  GaussianRaw g;
  g.mean.resize(action_dim_);
  g.log_std.resize(action_dim_);
  g.dmean_draw.resize(action_dim_);
  g.dlogstd_draw.resize(action_dim_);
  for (std::size_t i = 0; i < action_dim_; ++i) {
    const double m = std::tanh(out[i]);
    const double s = sigmoid(out[action_dim_ + i] + kScaleOffset);
    g.mean[i] = m;
    g.dmean_draw[i] = 1.0 - m * m;
    g.log_std[i] = kLogMinStd + kLogStdRange * s;
    g.dlogstd_draw[i] = kLogStdRange * s * (1.0 - s);
  }
  return g;
}

std::vector<double> ParametricPolicy::probabilities(const Observation& state) const {
  if (head_ != PolicyHead::kCategorical) throw ContractViolation("probabilities: categorical head only");
  Tape tape;
  return softmax(trunk_.forward(params_, input_for(state), tape));
}

ParametricPolicy::Gaussian ParametricPolicy::gaussian(const Observation& state) const {
  if (head_ != PolicyHead::kGaussian) throw ContractViolation("gaussian: gaussian head only");
  Tape tape;
  const GaussianRaw g = gaussian_raw(trunk_.forward(params_, input_for(state), tape));
  Gaussian out{g.mean, std::vector<double>(action_dim_)};
  for (std::size_t i = 0; i < action_dim_; ++i) out.stddev[i] = std::exp(g.log_std[i]);
  return out;
}

double ParametricPolicy::log_density(const Observation& state, const ActionValue& action) const {
  Tape tape;
  const auto out = trunk_.forward(params_, input_for(state), tape);
  if (head_ == PolicyHead::kCategorical) {
    if (!action.is_discrete() || action.index >= action_count_) {
      throw ContractViolation("log_density: discrete action out of range");
    }
    return out[action.index] - log_sum_exp(out);
  }
  if (action.is_discrete() || action.vector.size() != action_dim_) {
    throw ContractViolation("log_density: continuous action dimension mismatch");
  }
  const GaussianRaw g = gaussian_raw(out);
  double lp = 0.0;
  for (std::size_t i = 0; i < action_dim_; ++i) {
    const double z = (action.vector[i] - g.mean[i]) / std::exp(g.log_std[i]);
    lp += -0.5 * z * z - g.log_std[i] - kHalfLog2Pi;
  }
  return lp;
}

ActionValue ParametricPolicy::sample(const Observation& state, RandomStream& stream) const {
  if (head_ == PolicyHead::kCategorical) return ActionValue::discrete(stream.categorical(probabilities(state)));
  const Gaussian g = gaussian(state);
  std::vector<double> a(action_dim_);
  for (std::size_t i = 0; i < action_dim_; ++i) a[i] = g.mean[i] + g.stddev[i] * stream.normal();
  return ActionValue::continuous(std::move(a));
}

ActionValue ParametricPolicy::mode(const Observation& state) const {
  if (head_ == PolicyHead::kCategorical) {
    const auto p = probabilities(state);
    return ActionValue::discrete(static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin()));
  }
  return ActionValue::continuous(gaussian(state).mean);
}

double ParametricPolicy::accumulate_weighted_nll(std::span<const WeightedExample> batch, double scale,
                                                 GradientReport& grad) const {
  Tape tape;
  std::vector<double> d_out(trunk_.output_dim());
  double loss = 0.0;
  for (const WeightedExample& ex : batch) {
    if (!(ex.weight >= 0.0) || !std::isfinite(ex.weight)) {
      throw ContractViolation("weighted_nll: weights must be finite and nonnegative");
    }
    if (ex.weight == 0.0) continue;
    const auto out = trunk_.forward(params_, input_for(ex.state.get()), tape);
    const double c = scale * ex.weight;
    if (head_ == PolicyHead::kCategorical) {
      if (!ex.action.is_discrete() || ex.action.index >= action_count_) {
        throw ContractViolation("weighted_nll: discrete action out of range");
      }
      const auto p = softmax(out);
      loss -= c * (out[ex.action.index] - log_sum_exp(out));
      for (std::size_t j = 0; j < action_count_; ++j) d_out[j] = c * p[j];
      d_out[ex.action.index] -= c;
    } else {
      if (ex.action.is_discrete() || ex.action.vector.size() != action_dim_) {
        throw ContractViolation("weighted_nll: continuous action dimension mismatch");
      }
      const GaussianRaw g = gaussian_raw(out);
      for (std::size_t i = 0; i < action_dim_; ++i) {
        const double sd = std::exp(g.log_std[i]);
        const double z = (ex.action.vector[i] - g.mean[i]) / sd;
        loss -= c * (-0.5 * z * z - g.log_std[i] - kHalfLog2Pi);
        // d logp / d mean = z / sd ; d logp / d log_std = z^2 - 1
        d_out[i] = -c * (z / sd) * g.dmean_draw[i];
        d_out[action_dim_ + i] = -c * (z * z - 1.0) * g.dlogstd_draw[i];
      }
    }
    trunk_.backward(params_, tape, d_out, grad);
  }
  grad.loss += loss;
  return loss;
}

GradientReport ParametricPolicy::weighted_nll_gradient(std::span<const WeightedExample> batch) const {
  GradientReport grad = trunk_.make_gradient();
  if (batch.empty()) return grad;
  accumulate_weighted_nll(batch, 1.0 / static_cast<double>(batch.size()), grad);
  grad.finalize();
  return grad;
}

double ParametricPolicy::kl_divergence(const Observation& state, const ParametricPolicy& reference) const {
  if (head_ == PolicyHead::kCategorical) {
    const auto p = probabilities(state);
    const auto q = reference.probabilities(state);
    double kl = 0.0;
    for (std::size_t j = 0; j < action_count_; ++j) {
      if (p[j] > 0.0) kl += p[j] * (std::log(p[j]) - std::log(q[j]));
    }
    return kl;
  }
  const Gaussian a = gaussian(state);
  const Gaussian b = reference.gaussian(state);
  double kl = 0.0;
  for (std::size_t i = 0; i < action_dim_; ++i) {
    const double dm = a.mean[i] - b.mean[i];
    kl += std::log(b.stddev[i] / a.stddev[i]) +
          (a.stddev[i] * a.stddev[i] + dm * dm) / (2.0 * b.stddev[i] * b.stddev[i]) - 0.5;
  }
  return kl;
}

double ParametricPolicy::accumulate_kl(const Observation& state, const ParametricPolicy& reference, double scale,
                                       GradientReport& grad) const {
  Tape tape;
  const auto out = trunk_.forward(params_, input_for(state), tape);
  std::vector<double> d_out(trunk_.output_dim(), 0.0);
  double kl = 0.0;
  if (head_ == PolicyHead::kCategorical) {
    const auto p = softmax(out);
    const auto q = reference.probabilities(state);
    std::vector<double> log_ratio(action_count_);
    for (std::size_t j = 0; j < action_count_; ++j) {
      log_ratio[j] = p[j] > 0.0 ? std::log(p[j]) - std::log(q[j]) : 0.0;
      kl += p[j] * log_ratio[j];
    }
    for (std::size_t j = 0; j < action_count_; ++j) d_out[j] = scale * p[j] * (log_ratio[j] - kl);
  } else {
    const GaussianRaw g = gaussian_raw(out);
    const Gaussian ref = reference.gaussian(state);
    for (std::size_t i = 0; i < action_dim_; ++i) {
      const double s1 = std::exp(g.log_std[i]);
      const double s2 = ref.stddev[i];
      const double dm = g.mean[i] - ref.mean[i];
      kl += std::log(s2) - g.log_std[i] + (s1 * s1 + dm * dm) / (2.0 * s2 * s2) - 0.5;
      d_out[i] = scale * (dm / (s2 * s2)) * g.dmean_draw[i];
      d_out[action_dim_ + i] = scale * (-1.0 + s1 * s1 / (s2 * s2)) * g.dlogstd_draw[i];
    }
  }
  trunk_.backward(params_, tape, d_out, grad);
  grad.loss += scale * kl;
  return scale * kl;
}

}  // namespace pft::approx
