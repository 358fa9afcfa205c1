#pragma once

#include <string>

#include "json.hpp"
#include "pft/trainer/trainer.hpp"

namespace pft::bench {

// A run configuration file: the trainer's RunConfig plus where outputs go.
//
//   {
//     "env": "grid-stack",
//     "teacher": {"tier": "generalization", "target": 0.4, "seed": 0, "epsilon": 0.75},
//     "method": "R-CRR", "beta": 0.75,
//     "budget": 1000, "offline_episodes": 500,
//     "dataset": {"path": "d.pftdata", "deterministic": false, "seed": 0},
//     "seed": 0, "eval_episodes": 1000, "workers": 1,
//     "hyperparameters": {"policy_learning_rate": 0.01, "batch_ratio": [32, 32], ...},
//     "output": {"results": "results.csv", "log": "run.log.csv", "checkpoint": "run.ckpt"}
//   }
//
// "offline_fraction" may replace "offline_episodes" (rounded to the nearest
// episode). Unknown keys are rejected.
struct RunFile {
  trainer::RunConfig run;
  std::string method_name;
  std::optional<double> beta;
  std::optional<double> offline_fraction;  // as written in the file, if any
  std::string results_path;
  std::string log_path;
  std::string checkpoint_path;
};

// Throw ConfigError with the offending key in the message.
RunFile parse_run_file(const nlohmann::json& doc);
RunFile load_run_file(const std::string& path);
nlohmann::json to_json(const RunFile& file);

trainer::Hyperparameters parse_hyperparameters(const nlohmann::json& doc, trainer::Hyperparameters base = {});
nlohmann::json to_json(const trainer::Hyperparameters& hp);

std::string format_batch_ratio(const datastore::BatchRatio& r);  // "32:32"
datastore::BatchRatio parse_batch_ratio(const std::string& text);

}  // namespace pft::bench
