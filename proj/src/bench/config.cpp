#include "pft/bench/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "pft/core/error.hpp"

namespace pft::bench {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
T get(const json& obj, const std::string& key, const std::string& where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("bad value for '" + key + "' in " + where + ": " + e.what());
  }
}

template <typename T>
void read(const json& obj, const std::string& key, T& out, const std::string& where) {
  if (obj.contains(key) && !obj.at(key).is_null()) out = get<T>(obj, key, where);
}

template <typename T>
void read(const json& obj, const std::string& key, std::optional<T>& out, const std::string& where) {
  if (obj.contains(key) && !obj.at(key).is_null()) out = get<T>(obj, key, where);
}

std::uint64_t non_negative(const json& obj, const std::string& key, const std::string& where) {
  const auto& v = obj.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ConfigError("'" + key + "' in " + where + " must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

}  // namespace

std::string format_batch_ratio(const datastore::BatchRatio& r) {
  return std::to_string(r.offline) + ":" + std::to_string(r.online);
}

datastore::BatchRatio parse_batch_ratio(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ConfigError("batch ratio '" + text + "' is not offline:online");
  try {
    std::size_t used = 0;
    const auto off = std::stoull(text.substr(0, colon), &used);
    if (used != colon) throw std::invalid_argument(text);
    const std::string rest = text.substr(colon + 1);
    const auto on = std::stoull(rest, &used);
    if (used != rest.size()) throw std::invalid_argument(text);
    return {static_cast<std::size_t>(off), static_cast<std::size_t>(on)};
  } catch (const std::logic_error&) {
    throw ConfigError("batch ratio '" + text + "' is not offline:online");
  }
}

trainer::Hyperparameters parse_hyperparameters(const json& doc, trainer::Hyperparameters hp) {
  const std::string where = "hyperparameters";
  check_keys(doc,
             {"policy_learning_rate", "critic_learning_rate", "adam_epsilon", "gamma", "target_period", "batch_size",
              "batch_ratio", "timesteps_per_update", "matched_total_steps", "offline_steps", "critic_head", "support",
              "hidden", "awac_pure_fraction", "replay_capacity", "curve_points", "curve_eval_episodes", "shaping"},
             where);
  read(doc, "policy_learning_rate", hp.policy_learning_rate, where);
  read(doc, "critic_learning_rate", hp.critic_learning_rate, where);
  read(doc, "adam_epsilon", hp.adam_epsilon, where);
  read(doc, "gamma", hp.gamma, where);
  read(doc, "target_period", hp.target_period, where);
  read(doc, "batch_size", hp.batch_size, where);
  if (doc.contains("batch_ratio") && !doc["batch_ratio"].is_null()) {
    const auto& r = doc["batch_ratio"];
    if (r.is_string()) {
      hp.batch_ratio = parse_batch_ratio(r.get<std::string>());
    } else if (r.is_array() && r.size() == 2 && r[0].is_number_unsigned() && r[1].is_number_unsigned()) {
      hp.batch_ratio = datastore::BatchRatio{r[0].get<std::size_t>(), r[1].get<std::size_t>()};
    } else {
      throw ConfigError("batch_ratio must be [offline, online] or \"offline:online\"");
    }
  }
  read(doc, "timesteps_per_update", hp.timesteps_per_update, where);
  read(doc, "matched_total_steps", hp.matched_total_steps, where);
  read(doc, "offline_steps", hp.offline_steps, where);
  if (doc.contains("critic_head") && !doc["critic_head"].is_null()) {
    const auto head = get<std::string>(doc, "critic_head", where);
    if (head == "scalar") {
      hp.critic_head = approx::QHead::kScalar;
    } else if (head == "distributional") {
      hp.critic_head = approx::QHead::kDistributional;
    } else {
      throw ConfigError("critic_head must be scalar or distributional");
    }
  }
  if (doc.contains("support") && !doc["support"].is_null()) {
    const auto& s = doc["support"];
    check_keys(s, {"atoms", "v_min", "v_max"}, "support");
    approx::Support support;
    read(s, "atoms", support.n_atoms, "support");
    read(s, "v_min", support.v_min, "support");
    read(s, "v_max", support.v_max, "support");
    if (support.n_atoms < 2 || !(support.v_max > support.v_min)) throw ConfigError("support needs 2+ atoms, v_min < v_max");
    hp.support = support;
  }
  read(doc, "hidden", hp.hidden, where);
  read(doc, "awac_pure_fraction", hp.awac_pure_fraction, where);
  read(doc, "replay_capacity", hp.replay_capacity, where);
  read(doc, "curve_points", hp.curve_points, where);
  read(doc, "curve_eval_episodes", hp.curve_eval_episodes, where);
  if (doc.contains("shaping") && !doc["shaping"].is_null()) {
    const auto& s = doc["shaping"];
    check_keys(s, {"agent_to_object", "object_to_target", "success_bonus"}, "shaping");
    read(s, "agent_to_object", hp.shaping.agent_to_object, "shaping");
    read(s, "object_to_target", hp.shaping.object_to_target, "shaping");
    read(s, "success_bonus", hp.shaping.success_bonus, "shaping");
  }
  return hp;
}

json to_json(const trainer::Hyperparameters& hp) {
  json j;
  j["policy_learning_rate"] = hp.policy_learning_rate;
  j["critic_learning_rate"] = hp.critic_learning_rate;
  j["adam_epsilon"] = hp.adam_epsilon;
  j["gamma"] = hp.gamma;
  j["target_period"] = hp.target_period;
  j["batch_size"] = hp.batch_size;
  if (hp.batch_ratio) j["batch_ratio"] = {hp.batch_ratio->offline, hp.batch_ratio->online};
  j["timesteps_per_update"] = hp.timesteps_per_update;
  if (hp.matched_total_steps) j["matched_total_steps"] = *hp.matched_total_steps;
  j["offline_steps"] = hp.offline_steps;
  if (hp.critic_head) j["critic_head"] = *hp.critic_head == approx::QHead::kScalar ? "scalar" : "distributional";
  if (hp.support) j["support"] = {{"atoms", hp.support->n_atoms}, {"v_min", hp.support->v_min}, {"v_max", hp.support->v_max}};
  j["hidden"] = hp.hidden;
  j["awac_pure_fraction"] = hp.awac_pure_fraction;
  j["replay_capacity"] = hp.replay_capacity;
  j["curve_points"] = hp.curve_points;
  j["curve_eval_episodes"] = hp.curve_eval_episodes;
  j["shaping"] = {{"agent_to_object", hp.shaping.agent_to_object},
                  {"object_to_target", hp.shaping.object_to_target},
                  {"success_bonus", hp.shaping.success_bonus}};
  return j;
}

RunFile parse_run_file(const json& doc) {
  const std::string where = "run config";
  check_keys(doc,
             {"env", "teacher", "method", "beta", "budget", "offline_episodes", "offline_fraction", "dataset", "seed",
              "eval_episodes", "workers", "hyperparameters", "output"},
             where);
  RunFile f;
  trainer::RunConfig& r = f.run;
  read(doc, "env", r.env_id, where);
  if (!doc.contains("method")) throw ConfigError("run config has no method");
  f.method_name = get<std::string>(doc, "method", where);
  read(doc, "beta", f.beta, where);
  r.method = trainer::build_method(f.method_name, f.beta);

  if (doc.contains("teacher")) {
    const auto& t = doc["teacher"];
    check_keys(t, {"tier", "target", "seed", "epsilon"}, "teacher");
    if (t.contains("tier")) r.teacher_tier = envs::parse_teacher_tier(get<std::string>(t, "tier", "teacher"));
    read(t, "target", r.teacher_target, "teacher");
    if (t.contains("seed")) r.teacher_seed = non_negative(t, "seed", "teacher");
    read(t, "epsilon", r.teacher_epsilon, "teacher");
  }
  if (!doc.contains("budget")) throw ConfigError("run config has no budget");
  r.budget = non_negative(doc, "budget", where);
  if (doc.contains("offline_episodes") && doc.contains("offline_fraction")) {
    throw ConfigError("give offline_episodes or offline_fraction, not both");
  }
  if (doc.contains("offline_episodes")) r.offline_episodes = non_negative(doc, "offline_episodes", where);
  if (doc.contains("offline_fraction")) {
    const double frac = get<double>(doc, "offline_fraction", where);
    if (!(frac >= 0.0 && frac <= 1.0)) throw ConfigError("offline_fraction must lie in [0, 1]");
    f.offline_fraction = frac;
    r.offline_episodes = static_cast<std::uint64_t>(std::llround(frac * static_cast<double>(r.budget)));
  }
  if (doc.contains("dataset")) {
    const auto& d = doc["dataset"];
    check_keys(d, {"path", "deterministic", "seed"}, "dataset");
    read(d, "path", r.dataset_path, "dataset");
    read(d, "deterministic", r.deterministic_collection, "dataset");
    if (d.contains("seed")) r.dataset_seed = non_negative(d, "seed", "dataset");
  }
  if (doc.contains("seed")) r.seed = non_negative(doc, "seed", where);
  if (doc.contains("eval_episodes")) r.eval_episodes = non_negative(doc, "eval_episodes", where);
  if (doc.contains("workers")) r.workers = non_negative(doc, "workers", where);
  if (doc.contains("hyperparameters")) r.hp = parse_hyperparameters(doc["hyperparameters"]);
  if (doc.contains("output")) {
    const auto& o = doc["output"];
    check_keys(o, {"results", "log", "checkpoint"}, "output");
    read(o, "results", f.results_path, "output");
    read(o, "log", f.log_path, "output");
    read(o, "checkpoint", f.checkpoint_path, "output");
  }
  r.validate();
  return f;
}

RunFile load_run_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open run config " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("cannot parse " + path + ": " + e.what());
  }
  return parse_run_file(doc);
}

json to_json(const RunFile& f) {
  const trainer::RunConfig& r = f.run;
  json j;
  j["env"] = r.env_id;
  json t;
  t["tier"] = std::string(envs::to_string(r.teacher_tier));
  if (r.teacher_target) t["target"] = *r.teacher_target;
  t["seed"] = r.teacher_seed;
  if (r.teacher_epsilon) t["epsilon"] = *r.teacher_epsilon;
  j["teacher"] = t;
  j["method"] = f.method_name;
  if (f.beta) j["beta"] = *f.beta;
  j["budget"] = r.budget;
  j["offline_episodes"] = r.offline_episodes;
  j["dataset"] = {{"path", r.dataset_path}, {"deterministic", r.deterministic_collection}, {"seed", r.dataset_seed}};
  j["seed"] = r.seed;
  j["eval_episodes"] = r.eval_episodes;
  j["workers"] = r.workers;
  j["hyperparameters"] = to_json(r.hp);
  json o;
  if (!f.results_path.empty()) o["results"] = f.results_path;
  if (!f.log_path.empty()) o["log"] = f.log_path;
  if (!f.checkpoint_path.empty()) o["checkpoint"] = f.checkpoint_path;
  if (!o.empty()) j["output"] = o;
  return j;
}

}  // namespace pft::bench
