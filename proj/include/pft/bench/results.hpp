#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace pft::bench {

// One completed run. Inapplicable axes are written as empty fields:
// offline_fraction for methods that do not mix stores, beta for methods
// without a teacher mixture, batch_ratio for single-store methods.
struct ResultRow {
  std::string method;
  std::string env;
  std::string teacher;
  std::uint64_t budget = 0;
  std::uint64_t offline_episodes = 0;
  std::optional<double> offline_fraction;
  std::optional<double> beta;
  std::string batch_ratio;  // "offline:online" or empty
  std::uint64_t seed = 0;
  double success_rate = 0.0;
  double stderr_ = 0.0;
  std::uint64_t gradient_steps = 0;
  std::uint64_t episodes_offline_used = 0;
  std::uint64_t episodes_online_used = 0;
  double stochastic_success_rate = 0.0;

  // Identity of the grid cell this row belongs to (everything but outcomes).
  std::string cell_key() const;
  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

// method,env,teacher,budget,offline_episodes,offline_fraction,beta,
// batch_ratio,seed,success_rate,stderr,gradient_steps,
// episodes_offline_used,episodes_online_used,stochastic_success_rate
const std::vector<std::string>& result_columns();
std::string results_header();
std::string format_row(const ResultRow& row);
// Throws FormatError on a wrong column count or an unparsable field.
ResultRow parse_row(const std::string& line);

// Reads a results file; a missing file is an empty result set. Throws
// FormatError if the header differs from result_columns().
std::vector<ResultRow> read_results(const std::string& path);

// Appends one row under an exclusive lock on path + ".lock": the whole file
// is rewritten to a temporary and renamed over the original, so readers see
// either the old or the new file.
void append_result(const std::string& path, const ResultRow& row);

// Seeds pooled: mean and standard error (sample sd / sqrt(n)) of the
// deterministic success rate per configuration.
struct AggregateRow {
  std::string method, env, teacher;
  std::uint64_t budget = 0;
  std::optional<double> offline_fraction;
  std::optional<double> beta;
  std::string batch_ratio;
  std::size_t seeds = 0;
  double mean = 0.0;
  double stderr_ = 0.0;
  double stochastic_mean = 0.0;
};

// Groups by (method, env, teacher, budget, offline_fraction, beta,
// batch_ratio) in first-appearance order. With best_fraction, keeps for each
// (method, env, teacher, budget, beta, batch_ratio) only the offline
// fraction with the highest mean (first one on ties).
std::vector<AggregateRow> aggregate_results(const std::vector<ResultRow>& rows, bool best_fraction = false);
std::string aggregate_csv(const std::vector<AggregateRow>& rows);

}  // namespace pft::bench
