#include "pft/bench/sweep.hpp"

#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "pft/approx/checkpoint.hpp"
#include "pft/core/binary_io.hpp"
#include "pft/core/error.hpp"
#include "pft/datastore/dataset.hpp"
#include "pft/envs/registry.hpp"

namespace pft::bench {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

bool mixture_method(const std::string& name) { return name == "R-MPO" || name == "R-CRR" || name == "R-CRR-target"; }

bool mixes_stores(const trainer::MethodConfig& m) { return m.uses_dataset && m.uses_replay; }

std::string sanitize(const std::string& key) {
  std::string out;
  for (char c : key) {
    out += (c == '|' || c == ':' || c == '/' || c == ' ') ? '_' : c;
  }
  return out;
}

template <typename T>
std::vector<T> axis(const json& axes, const std::string& key, std::vector<T> fallback) {
  if (!axes.contains(key)) return fallback;
  const auto& a = axes.at(key);
  if (!a.is_array() || a.empty()) throw ConfigError("axis '" + key + "' must be a non-empty list");
  try {
    return a.get<std::vector<T>>();
  } catch (const json::exception& e) {
    throw ConfigError("axis '" + key + "': " + e.what());
  }
}

ResultRow identity_of(const RunFile& f) {
  const trainer::RunConfig& r = f.run;
  ResultRow row;
  row.method = f.method_name;
  row.env = r.env_id;
  row.teacher = std::string(envs::to_string(r.teacher_tier));
  row.budget = r.budget;
  row.offline_episodes = r.offline_episodes;
  if (mixes_stores(r.method)) {
    row.offline_fraction =
        f.offline_fraction.value_or(static_cast<double>(r.offline_episodes) / static_cast<double>(r.budget));
    if (r.method.awac_schedule) {
      row.batch_ratio = "schedule";
    } else {
      const std::size_t b = r.hp.batch_size;
      const datastore::BatchRatio fallback =
          r.offline_episodes > 0 ? datastore::BatchRatio{b / 2, b - b / 2} : datastore::BatchRatio{0, b};
      row.batch_ratio = format_batch_ratio(r.hp.batch_ratio.value_or(fallback));
    }
  }
  if (mixture_method(f.method_name)) row.beta = r.method.beta();
  row.seed = r.seed;
  return row;
}

void write_text(const std::string& path, const std::string& text) {
  const auto parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  write_file_atomic(path, text);
}

void run_children(const std::vector<std::pair<std::string, std::string>>& pending, const SweepOptions& options,
                  SweepReport& report) {
  std::map<pid_t, std::string> running;
  std::size_t next = 0;
  auto reap_one = [&] {
    int status = 0;
    const pid_t pid = ::waitpid(-1, &status, 0);
    if (pid < 0) throw Error("waitpid failed");
    const auto it = running.find(pid);
    if (it == running.end()) return;
    if (WIFEXITED(status) && WEXITSTATUS(status) == 0) {
      ++report.completed;
    } else {
      report.failed.push_back(it->second);
      if (options.progress) options.progress("failed " + it->second);
    }
    running.erase(it);
  };
  const std::size_t limit = std::max<std::size_t>(1, options.parallelism);
  while (next < pending.size() || !running.empty()) {
    while (next < pending.size() && running.size() < limit) {
      const auto& [key, config] = pending[next++];
      std::vector<std::string> args = options.child_command;
      args.push_back(config);
      std::vector<char*> argv;
      for (auto& a : args) argv.push_back(a.data());
      argv.push_back(nullptr);
      pid_t pid = 0;
      if (::posix_spawn(&pid, argv[0], nullptr, nullptr, argv.data(), environ) != 0) {
        report.failed.push_back(key);
        if (options.progress) options.progress("failed to start " + key);
        continue;
      }
      if (options.progress) options.progress("run " + key);
      running.emplace(pid, key);
    }
    if (!running.empty()) reap_one();
  }
}

}  // namespace

SweepSpec parse_sweep(const json& doc) {
  if (!doc.is_object()) throw ConfigError("sweep spec must be an object");
  for (const auto& [key, value] : doc.items()) {
    if (key != "base" && key != "axes" && key != "dataset_seed" && key != "deterministic_collection") {
      throw ConfigError("unknown key '" + key + "' in sweep spec");
    }
  }
  SweepSpec s;
  if (doc.contains("base")) {
    s.base = doc["base"];
    if (!s.base.is_object()) throw ConfigError("sweep base must be an object");
    for (const char* k : {"method", "beta", "budget", "offline_episodes", "offline_fraction", "seed", "env", "output"}) {
      if (s.base.contains(k)) throw ConfigError(std::string("'") + k + "' is set per cell, not in the sweep base");
    }
  }
  if (!doc.contains("axes")) throw ConfigError("sweep spec has no axes");
  const json& axes = doc["axes"];
  if (!axes.is_object()) throw ConfigError("sweep axes must be an object");
  for (const auto& [key, value] : axes.items()) {
    static const std::set<std::string> known{"method", "budget", "offline_fraction", "beta",
                                             "batch_ratio", "teacher", "env", "seed"};
    if (!known.count(key)) throw ConfigError("unknown axis '" + key + "'");
  }
  s.methods = axis<std::string>(axes, "method", {});
  s.budgets = axis<std::uint64_t>(axes, "budget", {});
  if (s.methods.empty() || s.budgets.empty()) throw ConfigError("sweep needs method and budget axes");
  s.offline_fractions = axis<double>(axes, "offline_fraction", s.offline_fractions);
  for (double f : s.offline_fractions) {
    if (!(f > 0.0 && f < 1.0)) throw ConfigError("offline fractions of mixed methods must lie in (0, 1)");
  }
  if (axes.contains("beta")) {
    s.betas.clear();
    for (double b : axis<double>(axes, "beta", {})) s.betas.emplace_back(b);
  }
  if (axes.contains("batch_ratio")) {
    s.batch_ratios.clear();
    for (const auto& r : axis<std::string>(axes, "batch_ratio", {})) {
      parse_batch_ratio(r);
      s.batch_ratios.emplace_back(r);
    }
  }
  s.teachers = axis<std::string>(axes, "teacher", s.teachers);
  s.envs = axis<std::string>(axes, "env", s.envs);
  s.seeds = axis<std::uint64_t>(axes, "seed", s.seeds);
  if (doc.contains("dataset_seed")) s.dataset_seed = doc["dataset_seed"].get<std::uint64_t>();
  if (doc.contains("deterministic_collection")) s.deterministic_collection = doc["deterministic_collection"].get<bool>();
  return s;
}

SweepSpec load_sweep(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open sweep spec " + path);
  try {
    return parse_sweep(json::parse(in));
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse " + path + ": " + e.what());
  }
}

std::vector<Cell> expand_sweep(const SweepSpec& spec) {
  std::vector<Cell> cells;
  std::set<std::string> seen;
  for (const auto& env : spec.envs) {
    for (const auto& tier : spec.teachers) {
      for (const auto& method : spec.methods) {
        const trainer::MethodConfig m = trainer::build_method(method);
        const bool mixed = mixes_stores(m);
        const std::vector<double> fractions = mixed ? spec.offline_fractions : std::vector<double>{-1.0};
        const std::vector<std::optional<double>> betas =
            mixture_method(method) ? spec.betas : std::vector<std::optional<double>>{std::nullopt};
        const std::vector<std::optional<std::string>> ratios =
            mixed && !m.awac_schedule ? spec.batch_ratios : std::vector<std::optional<std::string>>{std::nullopt};
        for (std::uint64_t budget : spec.budgets) {
          for (double fraction : fractions) {
            for (const auto& beta : betas) {
              for (const auto& ratio : ratios) {
                for (std::uint64_t seed : spec.seeds) {
                  json doc = spec.base;
                  doc["env"] = env;
                  doc["method"] = method;
                  if (beta) doc["beta"] = *beta;
                  doc["budget"] = budget;
                  if (mixed) {
                    doc["offline_fraction"] = fraction;
                  } else {
                    doc["offline_episodes"] = m.uses_dataset ? budget : 0;
                  }
                  doc["seed"] = seed;
                  json& teacher = doc["teacher"];
                  if (teacher.is_null()) teacher = json::object();
                  teacher["tier"] = tier;
                  json& data = doc["dataset"];
                  if (data.is_null()) data = json::object();
                  data["seed"] = spec.dataset_seed;
                  data["deterministic"] = spec.deterministic_collection;
                  if (ratio) {
                    json& hp = doc["hyperparameters"];
                    if (hp.is_null()) hp = json::object();
                    hp["batch_ratio"] = *ratio;
                  }
                  Cell cell;
                  cell.file = parse_run_file(doc);
                  cell.identity = identity_of(cell.file);
                  cell.key = cell.identity.cell_key();
                  if (seen.insert(cell.key).second) cells.push_back(std::move(cell));
                }
              }
            }
          }
        }
      }
    }
  }
  return cells;
}

std::string dataset_filename(const std::string& env, const std::string& tier, std::uint64_t episodes,
                             std::uint64_t dataset_seed, bool deterministic) {
  return env + "_" + tier + "_n" + std::to_string(episodes) + "_s" + std::to_string(dataset_seed) +
         (deterministic ? "_det" : "") + ".pftdata";
}

std::string content_hash(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ResultRow execute_run(const RunFile& file) {
  const auto result = trainer::train(file.run);
  ResultRow row = identity_of(file);
  row.success_rate = result.final_eval.success_rate;
  row.stderr_ = result.final_eval.stderr_;
  row.gradient_steps = result.gradient_steps;
  row.episodes_offline_used = result.ledger.offline_used();
  row.episodes_online_used = result.ledger.online_used();
  row.stochastic_success_rate = result.final_stochastic_eval.success_rate;
  if (!file.log_path.empty()) write_text(file.log_path, trainer::training_log_csv(result.log));
  if (!file.checkpoint_path.empty()) write_text(file.checkpoint_path, result.checkpoint);
  if (!file.results_path.empty()) append_result(file.results_path, row);
  return row;
}

SweepReport run_sweep(const SweepSpec& spec, const SweepOptions& options) {
  const fs::path root(options.results_dir);
  const std::string results = options.results_file.empty() ? (root / "results.csv").string() : options.results_file;
  std::set<std::string> done;
  for (const auto& row : read_results(results)) done.insert(row.cell_key());

  SweepReport report;
  std::vector<Cell> cells = expand_sweep(spec);
  report.cells = cells.size();

  // One teacher calibration per (env, tier, target, teacher seed), shared by
  // every cell and recorded in the cell configs.
  std::map<std::string, double> epsilons;
  std::map<std::string, std::string> manifest;
  const fs::path manifest_path = root / "datasets" / "manifest.json";
  if (fs::exists(manifest_path)) {
    try {
      manifest = json::parse(read_file(manifest_path.string())).get<std::map<std::string, std::string>>();
    } catch (const json::exception& e) {
      throw FormatError(manifest_path.string() + ": " + e.what());
    }
  }

  std::vector<std::pair<std::string, std::string>> pending;  // (key, config path)
  for (Cell& cell : cells) {
    if (done.count(cell.key)) {
      ++report.skipped;
      continue;
    }
    trainer::RunConfig& run = cell.file.run;
    auto env = envs::make_environment(run.env_id);
    const bool need_teacher = run.method.uses_teacher() || run.offline_episodes > 0;
    if (need_teacher && !run.teacher_epsilon) {
      const std::string tkey = run.env_id + "|" + std::string(envs::to_string(run.teacher_tier)) + "|" +
                               std::to_string(run.teacher_target.value_or(-1.0)) + "|" +
                               std::to_string(run.teacher_seed);
      auto it = epsilons.find(tkey);
      if (it == epsilons.end()) {
        it = epsilons.emplace(tkey, trainer::run_teacher(run, *env).epsilon()).first;
      }
      run.teacher_epsilon = it->second;
    }
    if (run.offline_episodes > 0) {
      const std::string name = dataset_filename(run.env_id, std::string(envs::to_string(run.teacher_tier)),
                                                run.offline_episodes, run.dataset_seed, run.deterministic_collection);
      const fs::path path = root / "datasets" / name;
      if (!fs::exists(path)) {
        const auto teacher = trainer::run_teacher(run, *env);
        const auto data = datastore::dataset_collect(*env, teacher, run.offline_episodes, run.deterministic_collection,
                                                     RandomStream(run.dataset_seed, trainer::kDatasetStream));
        const std::string bytes = datastore::serialize_dataset(data);
        write_text(path.string(), bytes);
        manifest[name] = content_hash(bytes);
        write_text(manifest_path.string(), json(manifest).dump(2) + "\n");
        report.datasets.push_back(path.string());
        if (options.progress) options.progress("dataset " + name);
      } else if (manifest.count(name) && manifest[name] != content_hash(read_file(path.string()))) {
        throw FormatError("dataset " + path.string() + " does not match its recorded content hash");
      }
      run.dataset_path = path.string();
    }
    const std::string stem = sanitize(cell.key);
    cell.file.results_path = results;
    cell.file.log_path = (root / "logs" / (stem + ".csv")).string();
    cell.file.checkpoint_path = (root / "checkpoints" / (stem + ".ckpt")).string();
    const std::string config_path = (root / "cells" / (stem + ".json")).string();
    write_text(config_path, to_json(cell.file).dump(2) + "\n");

    pending.emplace_back(cell.key, config_path);
    if (options.child_command.empty()) {
      if (options.progress) options.progress("run " + cell.key);
      try {
        execute_run(cell.file);
        ++report.completed;
      } catch (const Error& e) {
        if (options.progress) options.progress("failed " + cell.key + ": " + e.what());
        report.failed.push_back(cell.key);
      }
    }
  }
  if (!options.child_command.empty()) run_children(pending, options, report);
  return report;
}

}  // namespace pft::bench
