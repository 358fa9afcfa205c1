#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pft/approx/adam.hpp"
#include "pft/approx/policy.hpp"
#include "pft/approx/q_function.hpp"
#include "pft/core/random.hpp"
#include "pft/core/types.hpp"
#include "pft/critic/critic.hpp"
#include "pft/envs/teacher.hpp"

namespace pft::actor {

// Where candidate actions for the weighted likelihood come from.
enum class PriorKind { kCurrentPolicy, kLoggedBehavior, kTeacher };

struct PriorComponent {
  PriorKind kind = PriorKind::kCurrentPolicy;
  double weight = 1.0;
  friend bool operator==(const PriorComponent&, const PriorComponent&) = default;
};

// A prior is a convex combination of the three sources. Logged-behavior is
// only reachable through the transition's stored action.
struct PriorSpec {
  std::vector<PriorComponent> components;

  static PriorSpec single(PriorKind kind) { return {{{kind, 1.0}}}; }
  static PriorSpec mixture(std::vector<PriorComponent> components);
  // (1 - beta) * current policy + beta * teacher
  static PriorSpec policy_teacher(double beta);
  // (1 - beta) * logged behavior + beta * teacher
  static PriorSpec logged_teacher(double beta);

  // Components with strictly positive weight.
  std::vector<PriorComponent> effective() const;
  bool purely_logged() const;
  bool uses(PriorKind kind) const;
  double weight_of(PriorKind kind) const;
  // Throws ContractViolation unless weights are >= 0 and sum to 1 (1e-9).
  void validate() const;
  std::string describe() const;
  friend bool operator==(const PriorSpec&, const PriorSpec&) = default;
};

std::string to_string(PriorKind kind);

enum class Normalization { kUnit, kSoftmaxZ, kAdvantageBaseline };
std::string to_string(Normalization n);

struct ImprovementConfig {
  Normalization normalization = Normalization::kUnit;
  PriorSpec prior = PriorSpec::single(PriorKind::kLoggedBehavior);
  double temperature = 1.0;               // eta when it is not solved for
  bool solve_temperature = false;         // softmax-Z: pick eta from kl_bound
  double kl_bound = 0.1;                  // epsilon of the temperature dual
  std::size_t prior_samples = 10;         // n (ignored for a purely logged prior)
  std::optional<double> weight_clip = 20.0;  // advantage-baseline only
  std::size_t baseline_samples = 10;      // m for continuous actions
  double trust_region = 0.0;              // coefficient on KL(pi_new || pi_ref)
};

enum class SampleOrigin : std::size_t { kLogged = 0, kPolicy = 1, kTeacher = 2 };
std::string to_string(SampleOrigin origin);

struct PriorDraw {
  ActionValue action;
  SampleOrigin origin = SampleOrigin::kLogged;
};

// Draws candidate actions for one transition. A purely logged prior yields
// exactly the stored action. Otherwise n draws, each picking a component by
// weight; when only one component has positive weight no selection draw is
// consumed, so a degenerate mixture replays its single component exactly.
std::vector<PriorDraw> draw_prior_actions(const PriorSpec& prior, const Transition& transition,
                                          const approx::ParametricPolicy& policy,
                                          const envs::TeacherPolicy* teacher, std::size_t n, RandomStream& stream);

// exp(q_i / eta) / mean_j exp(q_j / eta), computed after subtracting max q.
std::vector<double> softmax_weights(std::span<const double> q, double eta);
// min(exp(advantage / eta), clip).
double advantage_weight(double advantage, double eta, std::optional<double> clip);

// Mean over states of KL(softmax(q_s / eta) || uniform over the samples).
double mean_sample_kl(const std::vector<std::vector<double>>& q_by_state, double eta);

struct TemperatureSolution {
  double eta = 1.0;
  double mean_kl = 0.0;
  bool degenerate = false;  // every state's samples had equal values
};

// Solves the temperature dual: the eta at which mean_sample_kl equals
// epsilon, located by bisection in log(eta) on [lo, hi]. The returned eta is
// the larger end of the final bracket, so its KL never exceeds epsilon. If
// even eta = lo stays below epsilon, lo is returned.
TemperatureSolution solve_temperature(const std::vector<std::vector<double>>& q_by_state, double epsilon,
                                      double lo = 1e-6, double hi = 1e6);
// The dual objective eta*eps + eta * mean_s log mean_i exp(q_si / eta).
double temperature_dual(const std::vector<std::vector<double>>& q_by_state, double epsilon, double eta);

struct WeightedSample {
  std::size_t transition = 0;  // index into the batch
  ActionValue action;
  double weight = 0.0;
  SampleOrigin origin = SampleOrigin::kLogged;
};

struct WeightedBatch {
  std::vector<WeightedSample> samples;
  double eta = 0.0;
  double mean_kl = 0.0;
  std::size_t clipped = 0;
};

// Draws prior actions for every transition and attaches weights according
// to the normalization. q may be null only for unit weights; teacher may be
// null only if the prior does not use it.
WeightedBatch build_weighted_batch(const ImprovementConfig& config, std::span<const critic::TransitionRef> batch,
                                   const approx::ParametricPolicy& policy, const envs::TeacherPolicy* teacher,
                                   const approx::QFunction* q, RandomStream& stream);

struct ImprovementReport {
  double loss = 0.0;         // total objective
  double nll = 0.0;          // weighted likelihood part
  double trust_kl = 0.0;     // mean KL(pi || reference) before the step
  double eta = 0.0;
  double mean_weight = 0.0;
  double max_weight = 0.0;
  std::size_t samples = 0;
  std::size_t clipped = 0;
  std::array<std::size_t, 3> origin_counts{};  // indexed by SampleOrigin
};

// Clears grad and fills it with the gradient of the weighted likelihood
// objective, plus trust_region * mean KL(pi || reference) when a reference
// is given and the coefficient is positive. Weight and origin statistics
// are filled into the returned report.
ImprovementReport accumulate_improvement(const ImprovementConfig& config, const WeightedBatch& weighted,
                                         std::span<const critic::TransitionRef> batch,
                                         const approx::ParametricPolicy& policy,
                                         const approx::ParametricPolicy* reference, approx::GradientReport& grad);

// Owns the policy optimizer state and a reusable gradient buffer.
class PolicyImprover {
 public:
  PolicyImprover(ImprovementConfig config, approx::AdamConfig optimizer, const approx::ParametricPolicy& policy);

  const ImprovementConfig& config() const { return config_; }
  ImprovementConfig& mutable_config() { return config_; }
  const approx::GradientReport& last_gradient() const { return workspace_; }

  // build_weighted_batch, accumulate_improvement, one Adam step.
  ImprovementReport step(std::span<const critic::TransitionRef> batch, approx::ParametricPolicy& policy,
                         const envs::TeacherPolicy* teacher, const approx::QFunction* q,
                         const approx::ParametricPolicy* reference, RandomStream& stream);

 private:
  ImprovementConfig config_;
  approx::AdamConfig optimizer_;
  approx::AdamState adam_;
  approx::GradientReport workspace_;
};

}  // namespace pft::actor
