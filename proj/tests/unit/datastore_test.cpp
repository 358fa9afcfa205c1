#include <cmath>
#include <set>

#include "doctest.h"
#include "pft/core/error.hpp"
#include "pft/datastore/dataset.hpp"
#include "pft/datastore/replay.hpp"
#include "pft/envs/grid_stack.hpp"
#include "pft/envs/point_stack.hpp"

using namespace pft;
using namespace pft::datastore;

namespace {

Transition tagged(double reward) {
  Transition t;
  t.reward = reward;
  return t;
}

}  // namespace

TEST_CASE("deterministic collection with the optimal grid teacher always succeeds") {
  envs::GridStackEnv env;
  const envs::TeacherPolicy teacher(envs::make_grid_optimal_controller(0.98), env.spec(), 0.0);
  const auto data = dataset_collect(env, teacher, 200, true, RandomStream(1, 0));
  CHECK(data.episode_count() == 200);
  CHECK(data.success_rate() == 1.0);
  CHECK(data.metadata().deterministic);
  for (const auto& e : data.episodes()) {
    CHECK(e.source == EpisodeSource::kTeacherOffline);
    CHECK(e.transitions.back().terminal);
    for (std::size_t i = 0; i + 1 < e.transitions.size(); ++i) {
      CHECK_FALSE(e.transitions[i].terminal);
      CHECK(e.transitions[i].next_state == e.transitions[i + 1].state);
    }
  }
}

TEST_CASE("stochastic collection matches the teacher's success rate within binomial noise") {
  envs::GridStackEnv env;
  const envs::TeacherPolicy teacher(envs::make_grid_optimal_controller(0.98), env.spec(), 0.7);
  const RandomStream stream(2, 0);
  const auto data = dataset_collect(env, teacher, 1500, false, stream);
  // Same per-episode streams as measure_success: the outcomes coincide.
  CHECK(data.success_rate() == envs::measure_success(env, teacher, 1500, stream));
  const double p = envs::measure_success(env, teacher, 3000, RandomStream(3, 0));
  CHECK(std::abs(data.success_rate() - p) < 3 * std::sqrt(p * (1 - p) / 1500) + 3 * std::sqrt(p * (1 - p) / 3000));
  for (const auto& t : data.episodes()[0].transitions) {
    CHECK(t.behavior_log_density == doctest::Approx(teacher.log_density(t.state, t.action)));
  }
  CHECK(data.transition_count() > data.episode_count());
}

TEST_CASE("dataset files round-trip bit-exactly") {
  envs::PointStackEnv env;
  const envs::TeacherPolicy teacher(envs::make_point_scripted_controller(), env.spec(), 0.3,
                                    envs::TeacherTier::kGeneralization);
  const auto data = dataset_collect(env, teacher, 30, false, RandomStream(4, 0));
  const std::string bytes = serialize_dataset(data);
  const auto back = deserialize_dataset(bytes);
  CHECK(back == data);
  CHECK(back.metadata().teacher_tier == "generalization");
  CHECK(serialize_dataset(back) == bytes);
  CHECK(back.transition(17) == data.transition(17));

  const OfflineDataset empty({"grid-stack", "mastery", true, 9, 0.5}, {});
  CHECK(deserialize_dataset(serialize_dataset(empty)) == empty);
}

TEST_CASE("damaged dataset files are rejected") {
  envs::GridStackEnv env;
  const envs::TeacherPolicy teacher(envs::make_grid_optimal_controller(0.98), env.spec(), 0.5);
  const std::string bytes = serialize_dataset(dataset_collect(env, teacher, 5, false, RandomStream(5, 0)));
  CHECK_THROWS_AS(deserialize_dataset(bytes.substr(0, bytes.size() - 1)), FormatError);
  CHECK_THROWS_AS(deserialize_dataset(bytes.substr(0, 40)), FormatError);
  CHECK_THROWS_AS(deserialize_dataset("PFTDATA9"), FormatError);
  std::string version = bytes;
  version[8] = 7;
  CHECK_THROWS_AS(deserialize_dataset(version), FormatError);
  std::string header = bytes;
  header[12] = char(0xff);  // header length now points past the end
  CHECK_THROWS_AS(deserialize_dataset(header), FormatError);
  std::string flag = bytes;
  // env id "grid-stack" (4+10) and tier "mastery" (4+7) precede the deterministic flag.
  flag[20 + 14 + 11] = 5;
  CHECK_THROWS_AS(deserialize_dataset(flag), FormatError);
  CHECK_THROWS_AS(dataset_collect(env, teacher, 0, false, RandomStream(5, 0)), ContractViolation);
}

TEST_CASE("dataset prefixes keep the leading episodes") {
  envs::GridStackEnv env;
  const envs::TeacherPolicy teacher(envs::make_grid_optimal_controller(0.98), env.spec(), 0.5);
  const auto data = dataset_collect(env, teacher, 20, false, RandomStream(6, 0));
  const auto head = data.prefix(7);
  CHECK(head.episode_count() == 7);
  CHECK(head.episodes()[6] == data.episodes()[6]);
  CHECK(head == dataset_collect(env, teacher, 7, false, RandomStream(6, 0)));
  CHECK_THROWS_AS(data.prefix(21), ContractViolation);
}

TEST_CASE("replay buffer evicts first-in first-out") {
  ReplayBuffer buffer(5);
  for (int i = 0; i < 8; ++i) buffer.push(tagged(i));
  CHECK(buffer.size() == 5);
  CHECK(buffer.total_pushed() == 8);
  for (std::size_t i = 0; i < 5; ++i) CHECK(buffer.at(i).reward == double(i + 3));
  MixedSampler sampler({0, 16});
  RandomStream s(7, 0);
  std::set<double> seen;
  for (int k = 0; k < 500; ++k) {
    for (const Transition& t : sampler.sample(nullptr, &buffer, 0, s).transitions) seen.insert(t.reward);
  }
  CHECK(seen == std::set<double>{3, 4, 5, 6, 7});
}

TEST_CASE("mixed batches have exact per-store counts") {
  std::vector<Episode> episodes(3);
  for (int e = 0; e < 3; ++e) {
    for (int i = 0; i < 4; ++i) episodes[e].transitions.push_back(tagged(-1));
  }
  const OfflineDataset data({}, episodes);
  ReplayBuffer buffer(100);
  for (int i = 0; i < 10; ++i) buffer.push(tagged(1));
  RandomStream s(8, 0);
  for (BatchRatio r : {BatchRatio{64, 0}, BatchRatio{32, 32}, BatchRatio{0, 64}, BatchRatio{48, 16}}) {
    MixedSampler sampler(r);
    for (int k = 0; k < 2000; ++k) {
      const auto b = sampler.sample(&data, &buffer, k, s);
      REQUIRE(b.transitions.size() == 64);
      std::size_t off = 0;
      for (const Transition& t : b.transitions) off += t.reward < 0;
      REQUIRE(off == r.offline);
    }
  }
  CHECK_THROWS_AS(MixedSampler({32, 32}).sample(&data, nullptr, 0, s), EmptyStore);
  CHECK_THROWS_AS(MixedSampler({32, 32}).sample(nullptr, &buffer, 0, s), EmptyStore);
  const ReplayBuffer none(4);
  CHECK_THROWS_AS(MixedSampler({0, 64}).sample(&data, &none, 0, s), EmptyStore);
}

TEST_CASE("AWAC schedule anchors and continuity") {
  AwacSchedule s;
  s.t_temp_start = 400;
  s.t_pure_offline = 500;
  s.t_ramp_end = 1100;
  auto p = awac_fraction(s, 0);
  CHECK(p.offline_fraction == 1.0);
  CHECK(p.temperature == 1.0);
  p = awac_fraction(s, 500);
  CHECK(p.offline_fraction == 1.0);
  CHECK(p.temperature == doctest::Approx(0.1));
  CHECK(awac_fraction(s, 800).offline_fraction == doctest::Approx(0.6));
  CHECK(awac_fraction(s, 450).temperature == doctest::Approx(0.55));
  CHECK(awac_fraction(s, 5000).offline_fraction == doctest::Approx(0.2));
  double prev_f = 1.0, prev_t = 1.0;
  for (std::uint64_t t = 0; t <= 1200; ++t) {
    const auto q = awac_fraction(s, t);
    CHECK(q.offline_fraction <= prev_f + 1e-15);
    CHECK(std::abs(q.offline_fraction - prev_f) <= 0.8 / 600 + 1e-12);
    CHECK(std::abs(q.temperature - prev_t) <= 0.9 / 100 + 1e-12);
    prev_f = q.offline_fraction;
    prev_t = q.temperature;
  }
  const auto planned = AwacSchedule::for_planned_steps(1000);
  CHECK(planned.t_pure_offline == 450);
  CHECK(planned.t_temp_start == 360);
  CHECK(planned.t_ramp_end == 1000);
  MixedSampler sampler({32, 32}, planned);
  CHECK(sampler.ratio_at(0) == BatchRatio{64, 0});
  CHECK(sampler.ratio_at(2000) == BatchRatio{13, 51});
  AwacSchedule bad;
  bad.t_temp_start = 5;
  bad.t_pure_offline = 5;
  CHECK_THROWS_AS(bad.validate(), ContractViolation);
}
