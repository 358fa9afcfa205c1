#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "doctest.h"
#include "pft/bench/config.hpp"
#include "pft/bench/results.hpp"
#include "pft/bench/sweep.hpp"
#include "pft/core/binary_io.hpp"
#include "pft/core/error.hpp"

using namespace pft;
using namespace pft::bench;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("pft_bench_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int n = 0;
    return n;
  }
};

ResultRow sample_row() {
  ResultRow r;
  r.method = "R-CRR";
  r.env = "grid-stack";
  r.teacher = "generalization";
  r.budget = 1000;
  r.offline_episodes = 500;
  r.offline_fraction = 0.5;
  r.beta = 0.75;
  r.batch_ratio = "32:32";
  r.seed = 2;
  r.success_rate = 0.561;
  r.stderr_ = std::sqrt(0.561 * 0.439 / 1000);
  r.gradient_steps = 50000;
  r.episodes_offline_used = 500;
  r.episodes_online_used = 500;
  r.stochastic_success_rate = 0.1 + 0.2;
  return r;
}

}  // namespace

TEST_CASE("result rows round-trip exactly, including empty axes") {
  ResultRow r = sample_row();
  CHECK(parse_row(format_row(r)) == r);
  r.beta.reset();
  r.offline_fraction.reset();
  r.batch_ratio.clear();
  const std::string line = format_row(r);
  CHECK(line.find(",,,") != std::string::npos);
  CHECK(parse_row(line) == r);
}

TEST_CASE("malformed result rows are rejected") {
  CHECK_THROWS_AS(parse_row("a,b,c"), FormatError);
  std::string line = format_row(sample_row());
  line.replace(line.find("1000"), 4, "1e3x");
  CHECK_THROWS_AS(parse_row(line), FormatError);
}

TEST_CASE("appending creates the header once and keeps earlier rows") {
  TempDir dir;
  const std::string path = (dir.path / "r.csv").string();
  CHECK(read_results(path).empty());
  ResultRow a = sample_row(), b = sample_row();
  b.seed = 3;
  append_result(path, a);
  append_result(path, b);
  const auto rows = read_results(path);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == a);
  CHECK(rows[1] == b);
  write_file_atomic(path, "wrong,header\n");
  CHECK_THROWS_AS(read_results(path), FormatError);
  CHECK_THROWS_AS(append_result(path, a), FormatError);
}

TEST_CASE("aggregation pools seeds and best-fraction keeps the highest mean") {
  std::vector<ResultRow> rows;
  for (double f : {0.2, 0.5}) {
    for (std::uint64_t s : {0, 1}) {
      ResultRow r = sample_row();
      r.offline_fraction = f;
      r.seed = s;
      r.success_rate = f + 0.1 * static_cast<double>(s);
      rows.push_back(r);
    }
  }
  const auto all = aggregate_results(rows);
  REQUIRE(all.size() == 2);
  CHECK(all[0].seeds == 2);
  CHECK(all[0].mean == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(all[0].stderr_ == doctest::Approx(0.05).epsilon(1e-12));
  const auto best = aggregate_results(rows, true);
  REQUIRE(best.size() == 1);
  CHECK(*best[0].offline_fraction == 0.5);
  CHECK(aggregate_csv(best).find("R-CRR,grid-stack,generalization,1000,0.5,0.75,32:32,2,") != std::string::npos);
}

TEST_CASE("run files parse, round-trip and reject bad input") {
  const json doc = json::parse(R"({
    "method": "R-CRR", "beta": 0.5, "budget": 100, "offline_fraction": 0.3,
    "teacher": {"tier": "mastery", "epsilon": 0.2},
    "seed": 4, "eval_episodes": 50,
    "hyperparameters": {"batch_ratio": "16:48", "matched_total_steps": 1000, "policy_learning_rate": 0.003},
    "output": {"results": "out.csv"}
  })");
  const RunFile f = parse_run_file(doc);
  CHECK(f.run.offline_episodes == 30);
  CHECK(f.run.method.beta() == 0.5);
  CHECK(f.run.teacher_tier == envs::TeacherTier::kMastery);
  CHECK(*f.run.teacher_epsilon == 0.2);
  CHECK(f.run.hp.batch_ratio == datastore::BatchRatio{16, 48});
  CHECK(*f.run.hp.matched_total_steps == 1000);
  CHECK(f.run.hp.policy_learning_rate == 0.003);
  CHECK(f.results_path == "out.csv");

  const RunFile g = parse_run_file(to_json(f));
  CHECK(to_json(g) == to_json(f));
  CHECK(g.run.offline_episodes == f.run.offline_episodes);

  auto bad = [&](const char* key, json value) {
    json d = doc;
    d[key] = std::move(value);
    CHECK_THROWS_AS(parse_run_file(d), ConfigError);
  };
  bad("method", "nope");
  bad("budget", -1);
  bad("mystery", 1);
  bad("teacher", json{{"tier", "expert"}});
  bad("hyperparameters", json{{"batch_ratio", "32-32"}});
  bad("hyperparameters", json{{"gama", 0.9}});
  json both = doc;
  both["offline_episodes"] = 10;
  CHECK_THROWS_AS(parse_run_file(both), ConfigError);
  CHECK_THROWS_AS(parse_batch_ratio("a:b"), ConfigError);
  CHECK(format_batch_ratio({32, 32}) == "32:32");
}

TEST_CASE("sweep axes collapse where they do not apply") {
  const SweepSpec spec = parse_sweep(json::parse(R"({
    "axes": {"method": ["BC", "MPO", "R-CRR", "CRR-mixed"], "budget": [100],
             "offline_fraction": [0.2, 0.8], "beta": [0.5, 1.0], "seed": [0]}
  })"));
  const auto cells = expand_sweep(spec);
  std::multiset<std::string> methods;
  std::set<std::string> keys;
  for (const auto& c : cells) {
    methods.insert(c.identity.method);
    keys.insert(c.key);
    if (c.identity.method == "BC") CHECK(c.file.run.offline_episodes == 100);
    if (c.identity.method == "MPO") CHECK(c.file.run.offline_episodes == 0);
    if (c.identity.method != "R-CRR") CHECK_FALSE(c.identity.beta.has_value());
  }
  CHECK(methods.count("BC") == 1);
  CHECK(methods.count("MPO") == 1);
  CHECK(methods.count("R-CRR") == 4);
  CHECK(methods.count("CRR-mixed") == 2);
  CHECK(keys.size() == cells.size());
  CHECK_THROWS_AS(parse_sweep(json::parse(R"({"axes": {"method": ["BC"], "budget": [10],
                                                        "offline_fraction": [1.0]}})")),
                  ConfigError);
  CHECK_THROWS_AS(parse_sweep(json::parse(R"({"base": {"seed": 1}, "axes": {"method": ["BC"], "budget": [10]}})")),
                  ConfigError);
}

TEST_CASE("a rerun sweep adds no rows, reuses its datasets and refuses altered ones") {
  TempDir dir;
  const SweepSpec spec = parse_sweep(json::parse(R"({
    "base": {"eval_episodes": 10, "teacher": {"epsilon": 0.75},
             "hyperparameters": {"offline_steps": 20, "matched_total_steps": 20, "curve_points": 0}},
    "axes": {"method": ["BC", "R-CRR"], "budget": [8], "offline_fraction": [0.5], "seed": [0, 1]}
  })"));
  SweepOptions options;
  options.results_dir = dir.path.string();
  const auto first = run_sweep(spec, options);
  CHECK(first.cells == 4);
  CHECK(first.completed == 4);
  CHECK(first.failed.empty());
  CHECK(first.datasets.size() == 2);
  const std::string results = (dir.path / "results.csv").string();
  const auto rows = read_results(results);
  CHECK(rows.size() == 4);
  for (const auto& r : rows) CHECK(r.episodes_offline_used + r.episodes_online_used == r.budget);

  const auto second = run_sweep(spec, options);
  CHECK(second.skipped == 4);
  CHECK(second.completed == 0);
  CHECK(second.datasets.empty());
  CHECK(read_results(results) == rows);

  const std::string data = (dir.path / "datasets" / dataset_filename("grid-stack", "generalization", 8, 0, false)).string();
  REQUIRE(fs::exists(data));
  write_file_atomic(data, "corrupt");
  fs::remove(results);
  CHECK_THROWS_AS(run_sweep(spec, options), FormatError);
  CHECK_FALSE(fs::exists(results));
}

TEST_CASE("content hash is FNV-1a") {
  CHECK(content_hash("") == "cbf29ce484222325");
  CHECK(content_hash("a") == "af63dc4c8601ec8c");
}
