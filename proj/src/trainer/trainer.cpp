#include "pft/trainer/trainer.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>
#include <tuple>

#include "pft/actor/actor.hpp"
#include "pft/approx/checkpoint.hpp"
#include "pft/approx/factory.hpp"
#include "pft/core/error.hpp"
#include "pft/critic/critic.hpp"
#include "pft/datastore/dataset.hpp"
#include "pft/envs/registry.hpp"

namespace pft::trainer {

namespace {

using TeacherKey = std::tuple<std::string, int, double, std::uint64_t>;

std::mutex& calibration_mutex() {
  static std::mutex m;
  return m;
}

std::map<TeacherKey, double>& calibration_cache() {
  static std::map<TeacherKey, double> cache;
  return cache;
}

approx::Support default_support(bool shaped) {
  approx::Support s;
  if (shaped) {
    s.v_min = -2.0;
    s.v_max = 4.0;
  }
  return s;
}

std::string format_double(double x) {
  std::ostringstream out;
  out.precision(17);
  out << x;
  return out.str();
}

}  // namespace

void RunConfig::validate() const {
  if (budget == 0) throw ConfigError("budget must be positive");
  if (offline_episodes > budget) throw ConfigError("offline episodes exceed the budget");
  if (eval_episodes == 0) throw ConfigError("evaluation needs at least one episode");
  if (method.name.empty()) throw ConfigError("no method configured");
  if (offline_episodes > 0 && !method.uses_dataset) {
    throw ConfigError(method.name + " does not use offline data; set offline_episodes to 0");
  }
  if (method.offline_only() && offline_episodes == 0) {
    throw ConfigError(method.name + " trains offline only and needs offline episodes");
  }
  if (method.uses_replay && offline_episodes == budget) {
    throw ConfigError(method.name + " collects online data but the whole budget is offline");
  }
  if (method.awac_schedule && offline_episodes == 0) throw ConfigError("AWAC needs offline episodes");
  if (hp.batch_size == 0) throw ConfigError("batch size must be positive");
  if (hp.timesteps_per_update == 0) throw ConfigError("timesteps per update must be positive");
  if (hp.target_period == 0) throw ConfigError("target period must be positive");
  if (hp.matched_total_steps && method.awac_schedule) {
    const double pure = hp.awac_pure_fraction * static_cast<double>(*hp.matched_total_steps);
    if (pure < 2.0) throw ConfigError("matched_total_steps leaves no room for the AWAC schedule");
  }
  if (method.offline_only() && hp.offline_steps == 0) throw ConfigError("offline step count must be positive");
  if (hp.batch_ratio) {
    if (hp.batch_ratio->total() == 0) throw ConfigError("batch ratio is empty");
    if (hp.batch_ratio->offline > 0 && offline_episodes == 0) {
      throw ConfigError("batch ratio samples offline data but the run has none");
    }
    if (hp.batch_ratio->online > 0 && !method.uses_replay) {
      throw ConfigError("batch ratio samples replay but " + method.name + " collects no online data");
    }
  }
  if (!(hp.awac_pure_fraction > 0.0 && hp.awac_pure_fraction < 1.0)) {
    throw ConfigError("awac_pure_fraction must lie in (0, 1)");
  }
  method.improvement.prior.validate();
}

EvalReport evaluate(const approx::ParametricPolicy& policy, const envs::Environment& env, std::size_t n_episodes,
                    const RandomStream& stream, bool deterministic, std::size_t workers) {
  if (n_episodes == 0) throw ContractViolation("evaluate needs at least one episode");
  workers = std::max<std::size_t>(1, std::min(workers, n_episodes));
  std::vector<char> outcome(n_episodes, 0);
  auto run_share = [&](std::size_t w) {
    auto local = env.clone();
    for (std::size_t i = w; i < n_episodes; i += workers) {
      RandomStream layout = stream.derive(2 * i);
      RandomStream actions = stream.derive(2 * i + 1);
      Observation obs = local->reset(layout);
      while (!local->done()) {
        const ActionValue a = deterministic ? policy.mode(obs) : policy.sample(obs, actions);
        envs::StepResult r = local->step(a);
        if (r.success) outcome[i] = 1;
        obs = std::move(r.observation);
      }
    }
  };
  if (workers == 1) {
    run_share(0);
  } else {
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(run_share, w);
    for (auto& t : threads) t.join();
  }

  EvalReport report;
  report.episodes = n_episodes;
  report.deterministic = deterministic;
  report.outcomes.assign(outcome.begin(), outcome.end());
  std::size_t successes = 0;
  for (char c : outcome) successes += c;
  const double p = static_cast<double>(successes) / static_cast<double>(n_episodes);
  report.success_rate = p;
  report.stderr_ = std::sqrt(p * (1.0 - p) / static_cast<double>(n_episodes));
  return report;
}

const std::vector<std::string>& training_log_columns() {
  static const std::vector<std::string> columns{
      "gradient_step", "episodes_offline", "episodes_online", "eval_episodes", "success_rate",
      "success_stderr", "stochastic_success_rate", "policy_loss", "critic_loss", "mean_weight", "eta"};
  return columns;
}

std::string training_log_csv(const std::vector<LogRow>& rows) {
  std::string out;
  const auto& columns = training_log_columns();
  for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? "," : "") + columns[i];
  out += '\n';
  for (const LogRow& r : rows) {
    out += std::to_string(r.gradient_step) + ',' + std::to_string(r.episodes_offline) + ',' +
           std::to_string(r.episodes_online) + ',' + std::to_string(r.eval_episodes) + ',' +
           format_double(r.success_rate) + ',' + format_double(r.success_stderr) + ',' +
           format_double(r.stochastic_success_rate) + ',' + format_double(r.policy_loss) + ',' +
           format_double(r.critic_loss) + ',' + format_double(r.mean_weight) + ',' + format_double(r.eta) + '\n';
  }
  return out;
}

envs::TeacherPolicy run_teacher(const RunConfig& run, const envs::Environment& env) {
  const double target = run.teacher_target.value_or(envs::default_target_success(run.teacher_tier));
  auto base = envs::default_controller(env, run.hp.gamma);
  if (run.teacher_epsilon) return envs::TeacherPolicy(base, env.spec(), *run.teacher_epsilon, run.teacher_tier);

  const TeacherKey key{run.env_id, static_cast<int>(run.teacher_tier), target, run.teacher_seed};
  {
    std::lock_guard lock(calibration_mutex());
    const auto it = calibration_cache().find(key);
    if (it != calibration_cache().end()) return envs::TeacherPolicy(base, env.spec(), it->second, run.teacher_tier);
  }
  const auto teacher = envs::make_teacher(env, base, run.teacher_tier, target,
                                          RandomStream(run.teacher_seed, kTeacherCalibrationStream));
  std::lock_guard lock(calibration_mutex());
  calibration_cache()[key] = teacher.epsilon();
  return teacher;
}

namespace {

// Everything one training run owns. The trainer thread is the only writer.
class Session {
 public:
  Session(const RunConfig& run, const StepObserver& observer)
      : run_(run),
        observer_(observer),
        eval_env_(envs::make_environment(run.env_id)),
        train_env_(envs::make_environment(run.env_id, run.method.uses_shaped_reward, run.hp.shaping)),
        policy_(approx::make_policy(eval_env_->spec(), run.hp.hidden)),
        ledger_(run.budget),
        batch_stream_(run.seed, kBatchStream),
        prior_stream_(run.seed, kPriorStream),
        bootstrap_stream_(run.seed, kBootstrapStream),
        eval_stream_(run.seed, kEvalStream) {
    RandomStream init(run.seed, kPolicyInitStream);
    policy_.initialize(init);
    setup_data();
    setup_learners();
  }

  TrainResult run() {
    if (run_.method.offline_only()) {
      train_offline();
    } else {
      train_online();
    }
    return finish();
  }

 private:
  void setup_data() {
    const bool need_teacher = run_.method.uses_teacher() || (run_.offline_episodes > 0 && run_.dataset_path.empty());
    if (run_.offline_episodes > 0 && !run_.dataset_path.empty()) {
      datastore::OfflineDataset full = datastore::load_dataset(run_.dataset_path);
      if (full.metadata().env_id != run_.env_id) {
        throw ConfigError("dataset " + run_.dataset_path + " was collected on " + full.metadata().env_id);
      }
      if (full.episode_count() < run_.offline_episodes) {
        throw ConfigError("dataset " + run_.dataset_path + " holds " + std::to_string(full.episode_count()) +
                          " episodes, run needs " + std::to_string(run_.offline_episodes));
      }
      teacher_epsilon_ = full.metadata().teacher_epsilon;
      const bool same_tier = full.metadata().teacher_tier == envs::to_string(run_.teacher_tier);
      if (need_teacher) {
        RunConfig r = run_;
        if (!r.teacher_epsilon && same_tier) r.teacher_epsilon = full.metadata().teacher_epsilon;
        teacher_.emplace(run_teacher(r, *eval_env_));
      }
      dataset_ = full.episode_count() == run_.offline_episodes ? std::move(full) : full.prefix(run_.offline_episodes);
    } else if (need_teacher) {
      teacher_.emplace(run_teacher(run_, *eval_env_));
      if (run_.offline_episodes > 0) {
        dataset_ = datastore::dataset_collect(*eval_env_, *teacher_, run_.offline_episodes,
                                              run_.deterministic_collection,
                                              RandomStream(run_.dataset_seed, kDatasetStream));
      }
    }
    if (teacher_) teacher_epsilon_ = teacher_->epsilon();
    ledger_.consume(EpisodeSource::kTeacherOffline, run_.offline_episodes);

    const std::uint64_t online_budget = run_.budget - run_.offline_episodes;
    if (run_.method.uses_replay) {
      const std::size_t capacity = run_.hp.replay_capacity > 0
                                       ? run_.hp.replay_capacity
                                       : static_cast<std::size_t>(online_budget * eval_env_->spec().horizon);
      replay_.emplace(capacity);
    }
  }

  void setup_learners() {
    const auto& hp = run_.hp;
    const MethodConfig& m = run_.method;
    const std::size_t b = hp.batch_size;
    datastore::BatchRatio ratio{b / 2, b - b / 2};
    if (m.offline_only()) {
      ratio = {b, 0};
    } else if (!m.uses_dataset || dataset_.empty()) {
      ratio = {0, b};
    }
    if (hp.batch_ratio) ratio = *hp.batch_ratio;

    std::optional<datastore::AwacSchedule> schedule;
    if (m.awac_schedule) {
      const double online_estimate = static_cast<double>(run_.budget - run_.offline_episodes) *
                                     static_cast<double>(eval_env_->spec().horizon) /
                                     static_cast<double>(hp.timesteps_per_update);
      const auto planned = hp.matched_total_steps
                               ? *hp.matched_total_steps
                               : static_cast<std::uint64_t>(std::ceil(online_estimate / (1.0 - hp.awac_pure_fraction)));
      schedule = datastore::AwacSchedule::for_planned_steps(planned, hp.awac_pure_fraction);
    }
    sampler_.emplace(ratio, schedule);

    if (m.uses_critic) {
      const approx::QHead head = hp.critic_head.value_or(
          run_.env_id == "grid-stack" ? approx::QHead::kScalar : approx::QHead::kDistributional);
      auto q = approx::make_q_function(eval_env_->spec(), head, hp.support.value_or(default_support(m.uses_shaped_reward)),
                                       hp.hidden);
      RandomStream init(run_.seed, kCriticInitStream);
      q.initialize(init);
      critic::CriticConfig cc;
      cc.gamma = hp.gamma;
      cc.target_period = hp.target_period;
      cc.optimizer.learning_rate = hp.critic_learning_rate;
      cc.optimizer.epsilon = hp.adam_epsilon;
      critic_.emplace(std::move(q), cc);
    }
    approx::AdamConfig ac;
    ac.learning_rate = hp.policy_learning_rate;
    ac.epsilon = hp.adam_epsilon;
    improver_.emplace(m.improvement, ac, policy_);
    if (m.improvement.trust_region > 0.0) reference_.emplace(policy_);
  }

  void gradient_step() {
    const datastore::OfflineDataset* data = run_.method.uses_dataset && !dataset_.empty() ? &dataset_ : nullptr;
    const datastore::ReplayBuffer* replay = replay_ ? &*replay_ : nullptr;
    const auto batch = sampler_->sample(data, replay, steps_, batch_stream_);
    offline_samples_ += batch.offline_count;
    online_samples_ += batch.online_count;
    if (sampler_->schedule()) {
      improver_->mutable_config().temperature = datastore::awac_fraction(*sampler_->schedule(), steps_).temperature;
    }
    try {
      if (critic_) critic_loss_ += critic_->update(batch.transitions, policy_, bootstrap_stream_).loss;
      const auto report = improver_->step(batch.transitions, policy_, teacher_ ? &*teacher_ : nullptr,
                                          critic_ ? &critic_->online() : nullptr,
                                          reference_ ? &*reference_ : nullptr, prior_stream_);
      policy_loss_ += report.loss;
      weight_sum_ += report.mean_weight;
      eta_sum_ += report.eta;
      for (std::size_t i = 0; i < 3; ++i) origin_counts_[i] += report.origin_counts[i];
    } catch (const NumericDivergence& e) {
      throw NumericDivergence(run_.method.name + " diverged at gradient step " + std::to_string(steps_) + " (seed " +
                              std::to_string(run_.seed) + "): " + e.what());
    }
    ++steps_;
    ++window_steps_;
    if (reference_ && steps_ % run_.hp.target_period == 0) {
      auto dst = reference_->parameters();
      const auto src = policy_.parameters();
      std::copy(src.begin(), src.end(), dst.begin());
    }
    if (observer_) observer_(steps_, policy_);
  }

  void log_checkpoint(std::size_t episodes) {
    LogRow row;
    row.gradient_step = steps_;
    row.episodes_offline = ledger_.offline_used();
    row.episodes_online = ledger_.online_used();
    row.eval_episodes = episodes;
    const auto det = evaluate(policy_, *eval_env_, episodes, eval_stream_, true, run_.workers);
    const auto sto = evaluate(policy_, *eval_env_, episodes, eval_stream_, false, run_.workers);
    row.success_rate = det.success_rate;
    row.success_stderr = det.stderr_;
    row.stochastic_success_rate = sto.success_rate;
    if (window_steps_ > 0) {
      const double n = static_cast<double>(window_steps_);
      row.policy_loss = policy_loss_ / n;
      row.critic_loss = critic_loss_ / n;
      row.mean_weight = weight_sum_ / n;
      row.eta = eta_sum_ / n;
    }
    policy_loss_ = critic_loss_ = weight_sum_ = eta_sum_ = 0.0;
    window_steps_ = 0;
    log_.push_back(row);
  }

  // Intermediate checkpoints fire when progress/total crosses c/curve_points
  // for c < curve_points; the final evaluation closes the log.
  void maybe_checkpoint(std::uint64_t progress, std::uint64_t total) {
    const std::size_t points = run_.hp.curve_points;
    while (points > 0 && next_checkpoint_ < points && progress * points >= next_checkpoint_ * total) {
      log_checkpoint(run_.hp.curve_eval_episodes);
      ++next_checkpoint_;
    }
  }

  void train_offline() {
    const std::uint64_t total = run_.hp.offline_steps;
    for (std::uint64_t s = 0; s < total; ++s) {
      gradient_step();
      maybe_checkpoint(steps_, total);
    }
  }

  void train_online() {
    if (sampler_->schedule()) {
      while (steps_ < sampler_->schedule()->t_pure_offline) gradient_step();
    }
    const std::uint64_t online_budget = run_.budget - run_.offline_episodes;
    const RandomStream reset_root(run_.seed, kEnvResetStream);
    const RandomStream action_root(run_.seed, kStudentActionStream);
    const auto& matched = run_.hp.matched_total_steps;
    const std::uint64_t start = steps_;
    for (std::uint64_t e = 0; e < online_budget; ++e) {
      ledger_.consume(EpisodeSource::kStudentOnline, 1);
      RandomStream layout = reset_root.derive(e);
      RandomStream actions = action_root.derive(e);
      Observation obs = train_env_->reset(layout);
      while (!train_env_->done()) {
        Transition t;
        t.action = policy_.sample(obs, actions);
        t.behavior_log_density = policy_.log_density(obs, t.action);
        envs::StepResult r = train_env_->step(t.action);
        t.state = std::move(obs);
        t.reward = r.reward;
        t.terminal = r.success;
        t.next_state = r.observation;
        obs = std::move(r.observation);
        replay_->push(std::move(t));
        ++timesteps_;
        if (!matched && timesteps_ % run_.hp.timesteps_per_update == 0) gradient_step();
      }
      if (matched) {
        const std::uint64_t due = start + (*matched - start) * (e + 1) / online_budget;
        while (steps_ < due) gradient_step();
      }
      maybe_checkpoint(e + 1, online_budget);
    }
  }

  TrainResult finish() {
    auto final_eval = evaluate(policy_, *eval_env_, run_.eval_episodes, eval_stream_, true, run_.workers);
    auto final_sto = evaluate(policy_, *eval_env_, run_.eval_episodes, eval_stream_, false, run_.workers);
    LogRow row;
    row.gradient_step = steps_;
    row.episodes_offline = ledger_.offline_used();
    row.episodes_online = ledger_.online_used();
    row.eval_episodes = run_.eval_episodes;
    row.success_rate = final_eval.success_rate;
    row.success_stderr = final_eval.stderr_;
    row.stochastic_success_rate = final_sto.success_rate;
    if (window_steps_ > 0) {
      const double n = static_cast<double>(window_steps_);
      row.policy_loss = policy_loss_ / n;
      row.critic_loss = critic_loss_ / n;
      row.mean_weight = weight_sum_ / n;
      row.eta = eta_sum_ / n;
    }
    log_.push_back(row);

    std::vector<approx::CheckpointBlock> blocks{approx::checkpoint_block("policy", policy_)};
    if (critic_) blocks.push_back(approx::checkpoint_block("critic", critic_->online()));
    std::optional<approx::QFunction> q;
    if (critic_) q = critic_->online();
    return TrainResult{policy_,
                       std::move(q),
                       approx::encode_checkpoint(blocks),
                       std::move(final_eval),
                       std::move(final_sto),
                       std::move(log_),
                       ledger_,
                       steps_,
                       teacher_epsilon_,
                       offline_samples_,
                       online_samples_,
                       origin_counts_,
                       timesteps_};
  }

  const RunConfig& run_;
  const StepObserver& observer_;
  std::unique_ptr<envs::Environment> eval_env_;
  std::unique_ptr<envs::Environment> train_env_;
  approx::ParametricPolicy policy_;
  std::optional<approx::ParametricPolicy> reference_;
  std::optional<envs::TeacherPolicy> teacher_;
  double teacher_epsilon_ = 0.0;
  datastore::OfflineDataset dataset_;
  std::optional<datastore::ReplayBuffer> replay_;
  std::optional<datastore::MixedSampler> sampler_;
  std::optional<critic::CriticLearner> critic_;
  std::optional<actor::PolicyImprover> improver_;
  BudgetLedger ledger_;
  RandomStream batch_stream_;
  RandomStream prior_stream_;
  RandomStream bootstrap_stream_;
  RandomStream eval_stream_;

  std::uint64_t steps_ = 0;
  std::uint64_t timesteps_ = 0;
  std::uint64_t offline_samples_ = 0;
  std::uint64_t online_samples_ = 0;
  std::array<std::uint64_t, 3> origin_counts_{};
  std::size_t next_checkpoint_ = 1;
  std::uint64_t window_steps_ = 0;
  double policy_loss_ = 0.0, critic_loss_ = 0.0, weight_sum_ = 0.0, eta_sum_ = 0.0;
  std::vector<LogRow> log_;
};

}  // namespace

TrainResult train(const RunConfig& run, const StepObserver& observer) {
  run.validate();
  Session session(run, observer);
  return session.run();
}

}  // namespace pft::trainer
