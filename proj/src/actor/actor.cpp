#include "pft/actor/actor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pft/core/error.hpp"

namespace pft::actor {

std::string to_string(PriorKind kind) {
  switch (kind) {
    case PriorKind::kCurrentPolicy: return "policy";
    case PriorKind::kLoggedBehavior: return "logged";
    case PriorKind::kTeacher: return "teacher";
  }
  return "?";
}

std::string to_string(Normalization n) {
  switch (n) {
    case Normalization::kUnit: return "unit";
    case Normalization::kSoftmaxZ: return "softmax-z";
    case Normalization::kAdvantageBaseline: return "advantage-baseline";
  }
  return "?";
}

std::string to_string(SampleOrigin origin) {
  switch (origin) {
    case SampleOrigin::kLogged: return "logged";
    case SampleOrigin::kPolicy: return "policy";
    case SampleOrigin::kTeacher: return "teacher";
  }
  return "?";
}

PriorSpec PriorSpec::mixture(std::vector<PriorComponent> components) {
  PriorSpec p{std::move(components)};
  p.validate();
  return p;
}

PriorSpec PriorSpec::policy_teacher(double beta) {
  return mixture({{PriorKind::kCurrentPolicy, 1.0 - beta}, {PriorKind::kTeacher, beta}});
}

PriorSpec PriorSpec::logged_teacher(double beta) {
  return mixture({{PriorKind::kLoggedBehavior, 1.0 - beta}, {PriorKind::kTeacher, beta}});
}

std::vector<PriorComponent> PriorSpec::effective() const {
  std::vector<PriorComponent> out;
  for (const auto& c : components) {
    if (c.weight > 0.0) out.push_back(c);
  }
  return out;
}

bool PriorSpec::purely_logged() const {
  const auto e = effective();
  return e.size() == 1 && e[0].kind == PriorKind::kLoggedBehavior;
}

bool PriorSpec::uses(PriorKind kind) const { return weight_of(kind) > 0.0; }

double PriorSpec::weight_of(PriorKind kind) const {
  double w = 0.0;
  for (const auto& c : components) {
    if (c.kind == kind) w += c.weight;
  }
  return w;
}

void PriorSpec::validate() const {
  if (components.empty()) throw ContractViolation("prior needs at least one component");
  double total = 0.0;
  for (const auto& c : components) {
    if (!(c.weight >= 0.0) || !std::isfinite(c.weight)) {
      throw ContractViolation("prior weights must be finite and nonnegative");
    }
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ContractViolation("prior weights must sum to 1");
}

std::string PriorSpec::describe() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < components.size(); ++i) {
    if (i) os << '+';
    os << components[i].weight << '*' << to_string(components[i].kind);
  }
  return os.str();
}

std::vector<PriorDraw> draw_prior_actions(const PriorSpec& prior, const Transition& transition,
                                          const approx::ParametricPolicy& policy,
                                          const envs::TeacherPolicy* teacher, std::size_t n, RandomStream& stream) {
  const auto components = prior.effective();
  if (components.empty()) throw ContractViolation("prior has no component with positive weight");
  if (components.size() == 1 && components[0].kind == PriorKind::kLoggedBehavior) {
    return {{transition.action, SampleOrigin::kLogged}};
  }
  if (n == 0) throw ContractViolation("prior sample count must be positive");
  if (prior.uses(PriorKind::kTeacher) && teacher == nullptr) {
    throw ContractViolation("prior uses the teacher but none was given");
  }
  std::vector<double> weights;
  for (const auto& c : components) weights.push_back(c.weight);

  std::vector<PriorDraw> draws;
  draws.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = components.size() == 1 ? 0 : stream.categorical(weights);
    switch (components[k].kind) {
      case PriorKind::kLoggedBehavior:
        draws.push_back({transition.action, SampleOrigin::kLogged});
        break;
      case PriorKind::kCurrentPolicy:
        draws.push_back({policy.sample(transition.state, stream), SampleOrigin::kPolicy});
        break;
      case PriorKind::kTeacher:
        draws.push_back({teacher->sample(transition.state, stream), SampleOrigin::kTeacher});
        break;
    }
  }
  return draws;
}

std::vector<double> softmax_weights(std::span<const double> q, double eta) {
  if (!(eta > 0.0)) throw ContractViolation("temperature must be positive");
  if (q.empty()) return {};
  const double top = *std::max_element(q.begin(), q.end());
  std::vector<double> w(q.size());
  double total = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) total += (w[i] = std::exp((q[i] - top) / eta));
  const double mean = total / static_cast<double>(q.size());
  for (double& x : w) x /= mean;
  return w;
}

double advantage_weight(double advantage, double eta, std::optional<double> clip) {
  if (!(eta > 0.0)) throw ContractViolation("temperature must be positive");
  const double w = std::exp(advantage / eta);
  return clip ? std::min(w, *clip) : w;
}

double mean_sample_kl(const std::vector<std::vector<double>>& q_by_state, double eta) {
  if (q_by_state.empty()) return 0.0;
  double total = 0.0;
  for (const auto& q : q_by_state) {
    if (q.empty()) continue;
    const auto w = softmax_weights(q, eta);  // = n * softmax
    const double n = static_cast<double>(q.size());
    double kl = 0.0;
    for (double x : w) {
      if (x > 0.0) kl += (x / n) * std::log(x);
    }
    total += std::max(kl, 0.0);
  }
  return total / static_cast<double>(q_by_state.size());
}

double temperature_dual(const std::vector<std::vector<double>>& q_by_state, double epsilon, double eta) {
  if (!(eta > 0.0)) throw ContractViolation("temperature must be positive");
  double total = 0.0;
  for (const auto& q : q_by_state) {
    const double top = *std::max_element(q.begin(), q.end());
    double s = 0.0;
    for (double x : q) s += std::exp((x - top) / eta);
    total += top + eta * std::log(s / static_cast<double>(q.size()));
  }
  return eta * epsilon + total / static_cast<double>(q_by_state.size());
}

TemperatureSolution solve_temperature(const std::vector<std::vector<double>>& q_by_state, double epsilon,
                                      double lo, double hi) {
  if (!(epsilon > 0.0)) throw ContractViolation("KL bound must be positive");
  if (!(lo > 0.0 && hi > lo)) throw ContractViolation("temperature bracket must satisfy 0 < lo < hi");
  bool degenerate = true;
  for (const auto& q : q_by_state) {
    if (!q.empty() && *std::max_element(q.begin(), q.end()) != *std::min_element(q.begin(), q.end())) {
      degenerate = false;
    }
  }
  if (degenerate) return {1.0, 0.0, true};

  if (mean_sample_kl(q_by_state, lo) <= epsilon) return {lo, mean_sample_kl(q_by_state, lo), false};
  if (mean_sample_kl(q_by_state, hi) > epsilon) return {hi, mean_sample_kl(q_by_state, hi), false};
  // KL falls monotonically as eta grows; keep kl(a) > eps >= kl(b).
  double a = std::log(lo);
  double b = std::log(hi);
  for (int iter = 0; iter < 200 && b - a > 1e-12; ++iter) {
    const double mid = 0.5 * (a + b);
    (mean_sample_kl(q_by_state, std::exp(mid)) > epsilon ? a : b) = mid;
  }
  const double eta = std::exp(b);
  return {eta, mean_sample_kl(q_by_state, eta), false};
}

WeightedBatch build_weighted_batch(const ImprovementConfig& config, std::span<const critic::TransitionRef> batch,
                                   const approx::ParametricPolicy& policy, const envs::TeacherPolicy* teacher,
                                   const approx::QFunction* q, RandomStream& stream) {
  const Normalization norm = config.normalization;
  if (norm != Normalization::kUnit && q == nullptr) {
    throw ContractViolation("weighted improvement needs a critic");
  }
  WeightedBatch out;
  out.eta = norm == Normalization::kUnit ? 0.0 : config.temperature;
  std::vector<std::vector<double>> q_by_state;
  std::vector<std::size_t> first_sample;

  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Transition& t = batch[i];
    auto draws = draw_prior_actions(config.prior, t, policy, teacher, config.prior_samples, stream);
    first_sample.push_back(out.samples.size());

    if (norm == Normalization::kUnit) {
      for (auto& d : draws) out.samples.push_back({i, std::move(d.action), 1.0, d.origin});
      continue;
    }
    std::vector<double> values;
    values.reserve(draws.size());
    for (const auto& d : draws) values.push_back(q->value(t.state, d.action));

    if (norm == Normalization::kAdvantageBaseline) {
      const std::optional<std::size_t> m =
          q->discrete_actions() ? std::nullopt : std::optional<std::size_t>(config.baseline_samples);
      const double baseline = critic::value_baseline(*q, t.state, policy, m, stream);
      for (std::size_t k = 0; k < draws.size(); ++k) {
        const double raw = std::exp((values[k] - baseline) / config.temperature);
        const double w = advantage_weight(values[k] - baseline, config.temperature, config.weight_clip);
        if (w < raw) ++out.clipped;
        out.samples.push_back({i, std::move(draws[k].action), w, draws[k].origin});
      }
    } else {
      for (auto& d : draws) out.samples.push_back({i, std::move(d.action), 0.0, d.origin});
      q_by_state.push_back(std::move(values));
    }
  }

  if (norm == Normalization::kSoftmaxZ) {
    if (config.solve_temperature) {
      const auto sol = solve_temperature(q_by_state, config.kl_bound);
      out.eta = sol.eta;
      out.mean_kl = sol.mean_kl;
    } else {
      out.mean_kl = mean_sample_kl(q_by_state, out.eta);
    }
    for (std::size_t i = 0; i < q_by_state.size(); ++i) {
      const auto w = softmax_weights(q_by_state[i], out.eta);
      for (std::size_t k = 0; k < w.size(); ++k) out.samples[first_sample[i] + k].weight = w[k];
    }
  }
  return out;
}

ImprovementReport accumulate_improvement(const ImprovementConfig& config, const WeightedBatch& weighted,
                                         std::span<const critic::TransitionRef> batch,
                                         const approx::ParametricPolicy& policy,
                                         const approx::ParametricPolicy* reference, approx::GradientReport& grad) {
  grad.clear();
  ImprovementReport report;
  report.eta = weighted.eta;
  report.samples = weighted.samples.size();
  report.clipped = weighted.clipped;
  if (weighted.samples.empty()) return report;

  std::vector<approx::WeightedExample> examples;
  examples.reserve(weighted.samples.size());
  double total_weight = 0.0;
  for (const auto& s : weighted.samples) {
    examples.push_back({std::cref(batch[s.transition].get().state), s.action, s.weight});
    total_weight += s.weight;
    report.max_weight = std::max(report.max_weight, s.weight);
    ++report.origin_counts[static_cast<std::size_t>(s.origin)];
  }
  report.mean_weight = total_weight / static_cast<double>(examples.size());
  report.nll = policy.accumulate_weighted_nll(examples, 1.0 / static_cast<double>(examples.size()), grad);

  if (config.trust_region > 0.0 && reference != nullptr) {
    const double scale = config.trust_region / static_cast<double>(batch.size());
    double kl = 0.0;
    for (const Transition& t : batch) kl += policy.accumulate_kl(t.state, *reference, scale, grad);
    report.trust_kl = kl / config.trust_region;
  }
  grad.finalize();
  report.loss = grad.loss;
  return report;
}

PolicyImprover::PolicyImprover(ImprovementConfig config, approx::AdamConfig optimizer,
                               const approx::ParametricPolicy& policy)
    : config_(std::move(config)),
      optimizer_(optimizer),
      adam_(policy.parameters().size()),
      workspace_(policy.make_gradient()) {
  config_.prior.validate();
}

ImprovementReport PolicyImprover::step(std::span<const critic::TransitionRef> batch, approx::ParametricPolicy& policy,
                                       const envs::TeacherPolicy* teacher, const approx::QFunction* q,
                                       const approx::ParametricPolicy* reference, RandomStream& stream) {
  const WeightedBatch weighted = build_weighted_batch(config_, batch, policy, teacher, q, stream);
  ImprovementReport report = accumulate_improvement(config_, weighted, batch, policy, reference, workspace_);
  if (!std::isfinite(report.loss)) throw NumericDivergence("policy loss is not finite");
  approx::sgd_step(policy.parameters(), workspace_, adam_, optimizer_);
  return report;
}

}  // namespace pft::actor
