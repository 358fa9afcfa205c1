#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "pft/approx/checkpoint.hpp"
#include "pft/approx/factory.hpp"
#include "pft/bench/config.hpp"
#include "pft/bench/results.hpp"
#include "pft/bench/sweep.hpp"
#include "pft/core/binary_io.hpp"
#include "pft/core/error.hpp"
#include "pft/datastore/dataset.hpp"
#include "pft/envs/registry.hpp"
#include "pft/trainer/trainer.hpp"

namespace fs = std::filesystem;
using namespace pft;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitPartial = 3;

std::string results_dir() {
  const char* env = std::getenv("PFT_RESULTS_DIR");
  return env && *env ? env : "results";
}

int cmd_collect(const std::string& env_id, const std::string& tier, std::optional<double> target,
                std::uint64_t teacher_seed, std::uint64_t n, bool deterministic, std::uint64_t seed,
                const std::string& out, bool force) {
  if (n == 0) throw ConfigError("refusing to collect an empty dataset (n = 0)");
  if (fs::exists(out) && !force) throw ConfigError(out + " exists; pass --force to overwrite");
  trainer::RunConfig run;
  run.env_id = env_id;
  run.teacher_tier = envs::parse_teacher_tier(tier);
  run.teacher_target = target;
  run.teacher_seed = teacher_seed;
  auto env = envs::make_environment(env_id);
  const auto teacher = trainer::run_teacher(run, *env);
  const auto data =
      datastore::dataset_collect(*env, teacher, n, deterministic, RandomStream(seed, trainer::kDatasetStream));
  if (const auto parent = fs::path(out).parent_path(); !parent.empty()) fs::create_directories(parent);
  datastore::save_dataset(data, out);
  std::cout << out << ": " << data.episode_count() << " episodes, " << data.transition_count()
            << " transitions, success " << data.success_rate() << ", teacher epsilon " << teacher.epsilon() << "\n";
  return 0;
}

int cmd_run(const std::string& config, const std::string& results_override) {
  bench::RunFile file = bench::load_run_file(config);
  if (!results_override.empty()) file.results_path = results_override;
  if (file.results_path.empty()) file.results_path = (fs::path(results_dir()) / "results.csv").string();
  if (file.log_path.empty()) {
    file.log_path = (fs::path(file.results_path).parent_path() / "logs" / (fs::path(config).stem().string() + ".csv"))
                        .string();
  }
  if (!file.run.dataset_path.empty() && !fs::exists(file.run.dataset_path)) {
    throw ConfigError("dataset " + file.run.dataset_path + " does not exist");
  }
  const auto row = bench::execute_run(file);
  std::cout << bench::results_header() << "\n" << bench::format_row(row) << "\n";
  return 0;
}

int cmd_sweep(const std::string& spec_path, std::size_t parallel, bool in_process, const std::string& dir) {
  const auto spec = bench::load_sweep(spec_path);
  bench::SweepOptions options;
  options.results_dir = dir.empty() ? results_dir() : dir;
  options.parallelism = parallel;
  if (!in_process) options.child_command = {fs::read_symlink("/proc/self/exe").string(), "run"};
  options.progress = [](const std::string& msg) { std::cerr << msg << "\n"; };
  const auto report = bench::run_sweep(spec, options);
  std::cout << report.cells << " cells: " << report.completed << " run, " << report.skipped << " already done, "
            << report.failed.size() << " failed\n";
  for (const auto& key : report.failed) std::cout << "failed: " << key << "\n";
  return report.failed.empty() ? 0 : kExitPartial;
}

int cmd_eval(const std::string& checkpoint, const std::string& env_id, std::size_t episodes, std::uint64_t seed,
             bool stochastic, std::size_t workers) {
  if (episodes == 0) throw ConfigError("need at least one evaluation episode");
  const auto blocks = approx::decode_checkpoint(read_file(checkpoint));
  const auto it = std::find_if(blocks.begin(), blocks.end(), [](const auto& b) { return b.name == "policy"; });
  if (it == blocks.end()) throw FormatError(checkpoint + " has no policy block");
  auto env = envs::make_environment(env_id);
  std::vector<std::size_t> hidden;
  if (it->shape.size() > 2) hidden.assign(it->shape.begin() + 1, it->shape.end() - 1);
  auto policy = approx::make_policy(env->spec(), hidden.empty() ? approx::kDefaultHidden : hidden);
  approx::load_block(*it, policy);
  const auto report =
      trainer::evaluate(policy, *env, episodes, RandomStream(seed, trainer::kEvalStream), !stochastic, workers);
  std::cout << "success_rate," << report.success_rate << "\nstderr," << report.stderr_ << "\nepisodes,"
            << report.episodes << "\nmode," << (stochastic ? "stochastic" : "deterministic") << "\n";
  return 0;
}

int cmd_report_data(const std::string& results, bool best, const std::string& out) {
  const auto rows = bench::read_results(results);
  if (rows.empty()) throw ConfigError(results + " has no rows");
  const std::string csv = bench::aggregate_csv(bench::aggregate_results(rows, best));
  if (out.empty()) {
    std::cout << csv;
  } else {
    write_file_atomic(out, csv);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Policy finetuning benchmark: datasets, training runs and sweeps"};
  app.require_subcommand(1);

  auto* collect = app.add_subcommand("collect", "Collect teacher episodes into a dataset file");
  std::string c_env = "grid-stack", c_tier = "generalization", c_out;
  std::optional<double> c_target;
  std::uint64_t c_teacher_seed = 0, c_n = 0, c_seed = 0;
  bool c_det = false, c_force = false;
  collect->add_option("--env", c_env, "Environment id")->capture_default_str();
  collect->add_option("--tier", c_tier, "Teacher tier (mastery or generalization)")->capture_default_str();
  collect->add_option("--target", c_target, "Teacher success target (default by tier)");
  collect->add_option("--teacher-seed", c_teacher_seed, "Teacher calibration seed")->capture_default_str();
  collect->add_option("-n,--episodes", c_n, "Number of episodes")->required();
  collect->add_flag("--deterministic", c_det, "Execute the teacher's mode action");
  collect->add_option("--seed", c_seed, "Dataset seed")->capture_default_str();
  collect->add_option("-o,--out", c_out, "Output file")->required();
  collect->add_flag("--force", c_force, "Overwrite an existing file");

  auto* run = app.add_subcommand("run", "Train one configured run and append its result row");
  std::string r_config, r_results;
  run->add_option("config", r_config, "Run config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--results", r_results, "Results CSV (default $PFT_RESULTS_DIR/results.csv)");

  auto* sweep = app.add_subcommand("sweep", "Expand a sweep spec and run its missing cells");
  std::string s_spec, s_dir;
  std::size_t s_parallel = 1;
  bool s_in_process = false;
  sweep->add_option("spec", s_spec, "Sweep spec (JSON)")->required()->check(CLI::ExistingFile);
  sweep->add_option("-j,--parallel", s_parallel, "Concurrent cell processes")->capture_default_str();
  sweep->add_flag("--in-process", s_in_process, "Run cells in this process, one at a time");
  sweep->add_option("--results-dir", s_dir, "Output directory (default $PFT_RESULTS_DIR or ./results)");

  auto* eval = app.add_subcommand("eval", "Evaluate a policy checkpoint");
  std::string e_ckpt, e_env = "grid-stack";
  std::size_t e_episodes = 1000, e_workers = 1;
  std::uint64_t e_seed = 0;
  bool e_stochastic = false;
  eval->add_option("checkpoint", e_ckpt, "Checkpoint file")->required()->check(CLI::ExistingFile);
  eval->add_option("--env", e_env, "Environment id")->capture_default_str();
  eval->add_option("--episodes", e_episodes, "Evaluation episodes")->capture_default_str();
  eval->add_option("--seed", e_seed, "Evaluation seed")->capture_default_str();
  eval->add_option("--workers", e_workers, "Evaluation threads")->capture_default_str();
  eval->add_flag("--stochastic", e_stochastic, "Sample actions instead of taking the mode");

  auto* report = app.add_subcommand("report-data", "Aggregate a results CSV over seeds");
  std::string p_results, p_out;
  bool p_best = false;
  report->add_option("results", p_results, "Results CSV")->required()->check(CLI::ExistingFile);
  report->add_flag("--best-fraction", p_best, "Keep only the best offline fraction per configuration");
  report->add_option("-o,--out", p_out, "Output CSV (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*collect) return cmd_collect(c_env, c_tier, c_target, c_teacher_seed, c_n, c_det, c_seed, c_out, c_force);
    if (*run) return cmd_run(r_config, r_results);
    if (*sweep) return cmd_sweep(s_spec, s_parallel, s_in_process, s_dir);
    if (*eval) return cmd_eval(e_ckpt, e_env, e_episodes, e_seed, e_stochastic, e_workers);
    if (*report) return cmd_report_data(p_results, p_best, p_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ContractViolation& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
