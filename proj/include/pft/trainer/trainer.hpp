#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pft/approx/policy.hpp"
#include "pft/approx/q_function.hpp"
#include "pft/core/ledger.hpp"
#include "pft/core/random.hpp"
#include "pft/datastore/replay.hpp"
#include "pft/envs/environment.hpp"
#include "pft/envs/shaped_reward.hpp"
#include "pft/envs/teacher.hpp"
#include "pft/trainer/method.hpp"

namespace pft::trainer {

// Stream ids under the run seed. Every consumer of randomness has its own.
enum StreamId : std::uint64_t {
  kPolicyInitStream = 1,
  kCriticInitStream = 2,
  kEnvResetStream = 3,
  kStudentActionStream = 4,
  kBatchStream = 5,
  kPriorStream = 6,
  kBootstrapStream = 7,
  kEvalStream = 8,
  kDatasetStream = 9,
  kTeacherCalibrationStream = 10,
};

struct Hyperparameters {
  double policy_learning_rate = 1e-2;
  double critic_learning_rate = 1e-2;
  double adam_epsilon = 1e-8;
  double gamma = 0.98;
  std::size_t target_period = 100;
  std::size_t batch_size = 64;
  std::optional<datastore::BatchRatio> batch_ratio;  // default: half and half
  std::size_t timesteps_per_update = 5;
  // When set, online training takes this many gradient steps in total,
  // spread evenly over the online episodes (after each one), instead of one
  // step per timesteps_per_update.
  std::optional<std::uint64_t> matched_total_steps;
  std::uint64_t offline_steps = 200000;
  std::optional<approx::QHead> critic_head;           // default: scalar on grid, distributional otherwise
  std::optional<approx::Support> support;              // default: [0, 1], wider under reward shaping
  std::vector<std::size_t> hidden{64, 64};
  double awac_pure_fraction = 0.45;
  std::size_t replay_capacity = 0;                     // 0: the whole online budget fits
  std::size_t curve_points = 20;                       // evaluations per run (every 5%); 0 disables
  std::size_t curve_eval_episodes = 200;
  envs::ShapingWeights shaping{};
};

struct RunConfig {
  std::string env_id = "grid-stack";
  envs::TeacherTier teacher_tier = envs::TeacherTier::kGeneralization;
  std::optional<double> teacher_target;  // default by tier
  std::uint64_t teacher_seed = 0;
  std::optional<double> teacher_epsilon;  // skips calibration when set
  std::uint64_t budget = 1000;
  std::uint64_t offline_episodes = 0;
  std::string dataset_path;              // empty: collect in process
  bool deterministic_collection = false;
  std::uint64_t dataset_seed = 0;
  std::uint64_t seed = 0;
  MethodConfig method;
  std::size_t eval_episodes = 1000;
  std::size_t workers = 1;               // evaluation threads; training itself stays serial
  Hyperparameters hp;

  // Throws ConfigError for inconsistent budgets or data sources.
  void validate() const;
};

struct EvalReport {
  double success_rate = 0.0;
  double stderr_ = 0.0;  // binomial standard error
  std::size_t episodes = 0;
  bool deterministic = true;
  std::vector<bool> outcomes;
};

// Rolls out the policy (mode actions when deterministic) for n episodes.
// Episode i uses stream.derive(2i) for the layout and stream.derive(2i+1)
// for action draws, so results do not depend on the worker count.
EvalReport evaluate(const approx::ParametricPolicy& policy, const envs::Environment& env, std::size_t n_episodes,
                    const RandomStream& stream, bool deterministic = true, std::size_t workers = 1);

struct LogRow {
  std::uint64_t gradient_step = 0;
  std::uint64_t episodes_offline = 0;
  std::uint64_t episodes_online = 0;
  std::size_t eval_episodes = 0;
  double success_rate = 0.0;             // deterministic policy
  double success_stderr = 0.0;
  double stochastic_success_rate = 0.0;  // sampling policy, same layouts
  double policy_loss = 0.0;              // means since the previous row
  double critic_loss = 0.0;
  double mean_weight = 0.0;
  double eta = 0.0;
};

// Column order of the training log CSV.
const std::vector<std::string>& training_log_columns();
std::string training_log_csv(const std::vector<LogRow>& rows);

struct TrainResult {
  approx::ParametricPolicy policy;
  std::optional<approx::QFunction> critic;
  std::string checkpoint;
  EvalReport final_eval;
  EvalReport final_stochastic_eval;
  std::vector<LogRow> log;
  BudgetLedger ledger{0};
  std::uint64_t gradient_steps = 0;
  double teacher_epsilon = 0.0;
  std::uint64_t offline_samples = 0;        // transitions drawn from the dataset
  std::uint64_t online_samples = 0;         // transitions drawn from replay
  std::array<std::uint64_t, 3> origin_counts{};  // prior draws by SampleOrigin
  std::uint64_t online_timesteps = 0;
};

// Optional hook called after every gradient step (tests use it to compare
// parameter trajectories).
using StepObserver = std::function<void(std::uint64_t step, const approx::ParametricPolicy& policy)>;

TrainResult train(const RunConfig& run, const StepObserver& observer = {});

// The teacher a run uses: calibrated from (env, tier, target, teacher_seed).
envs::TeacherPolicy run_teacher(const RunConfig& run, const envs::Environment& env);

}  // namespace pft::trainer
