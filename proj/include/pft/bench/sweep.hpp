#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pft/bench/config.hpp"
#include "pft/bench/results.hpp"

namespace pft::bench {

// A grid over run settings. Every cell starts from `base` (run-config keys
// other than the axis ones). Axes that do not apply to a method collapse:
// offline_fraction and batch_ratio only vary for methods that mix the
// dataset with replay, beta only for the teacher-mixture methods.
//
//   {
//     "base": {"eval_episodes": 1000, "hyperparameters": {...}},
//     "axes": {"method": ["CRR", "R-CRR"], "budget": [1000, 3000],
//              "offline_fraction": [0.2, 0.5, 0.8], "beta": [0.75],
//              "batch_ratio": ["32:32"], "teacher": ["generalization"],
//              "env": ["grid-stack"], "seed": [0, 1]},
//     "dataset_seed": 0, "deterministic_collection": false
//   }
struct SweepSpec {
  nlohmann::json base = nlohmann::json::object();
  std::vector<std::string> methods;
  std::vector<std::uint64_t> budgets;
  std::vector<double> offline_fractions{0.5};
  std::vector<std::optional<double>> betas{std::nullopt};
  std::vector<std::optional<std::string>> batch_ratios{std::nullopt};
  std::vector<std::string> teachers{"generalization"};
  std::vector<std::string> envs{"grid-stack"};
  std::vector<std::uint64_t> seeds{0, 1};
  std::uint64_t dataset_seed = 0;
  bool deterministic_collection = false;
};

SweepSpec parse_sweep(const nlohmann::json& doc);
SweepSpec load_sweep(const std::string& path);

struct Cell {
  RunFile file;
  ResultRow identity;  // outcome fields left at zero
  std::string key;
};

// Expands the grid in axis order (env, teacher, method, budget, fraction,
// beta, batch_ratio, seed) and drops duplicates produced by collapsed axes.
std::vector<Cell> expand_sweep(const SweepSpec& spec);

// Filename of the shared dataset for (env, tier, size, seed, mode).
std::string dataset_filename(const std::string& env, const std::string& tier, std::uint64_t episodes,
                             std::uint64_t dataset_seed, bool deterministic);

// FNV-1a over the file bytes, as 16 hex digits.
std::string content_hash(const std::string& bytes);

// Trains one configured run, writes its log and checkpoint when paths are
// set, appends its row to the results file (if set) and returns the row.
ResultRow execute_run(const RunFile& file);

struct SweepOptions {
  std::string results_dir = "results";
  std::string results_file;  // default: <results_dir>/results.csv
  // When set, each cell runs as a child process: child_command followed by
  // the cell's config path, at most `parallelism` at a time. Otherwise cells
  // run in this process, one after another.
  std::vector<std::string> child_command;
  std::size_t parallelism = 1;
  std::function<void(const std::string&)> progress;
};

struct SweepReport {
  std::size_t cells = 0;
  std::size_t skipped = 0;  // already present in the results file
  std::size_t completed = 0;
  std::vector<std::string> failed;  // cell keys
  std::vector<std::string> datasets;  // files generated by this invocation
};

// Generates missing datasets once, writes one run config per pending cell
// under <results_dir>/cells, and runs them through the executor. Cells whose
// key already has a row are skipped, so rerunning a finished sweep adds no
// rows. Failures are collected, not thrown.
SweepReport run_sweep(const SweepSpec& spec, const SweepOptions& options);

}  // namespace pft::bench
