#include "pft/datastore/dataset.hpp"

#include <limits>

#include "pft/core/binary_io.hpp"
#include "pft/core/error.hpp"
#include "pft/datastore/rollout.hpp"

namespace pft::datastore {

namespace {

constexpr std::string_view kMagic = "PFTDATA1";

void put_observation(ByteWriter& w, const Observation& o) {
  w.u8(static_cast<std::uint8_t>(o.kind));
  w.u64(o.index);
  w.u32(static_cast<std::uint32_t>(o.features.size()));
  for (double x : o.features) w.f64(x);
}

void put_action(ByteWriter& w, const ActionValue& a) {
  w.u8(static_cast<std::uint8_t>(a.kind));
  w.u64(a.index);
  w.u32(static_cast<std::uint32_t>(a.vector.size()));
  for (double x : a.vector) w.f64(x);
}

std::vector<double> get_reals(ByteReader& r) {
  const std::uint32_t n = r.u32();
  if (n > r.remaining() / 8) throw FormatError("dataset record truncated");
  std::vector<double> v(n);
  for (double& x : v) x = r.f64();
  return v;
}

Observation get_observation(ByteReader& r) {
  Observation o;
  const std::uint8_t kind = r.u8();
  if (kind > 1) throw FormatError("bad observation kind in dataset");
  o.kind = static_cast<Observation::Kind>(kind);
  o.index = r.u64();
  o.features = get_reals(r);
  return o;
}

ActionValue get_action(ByteReader& r) {
  ActionValue a;
  const std::uint8_t kind = r.u8();
  if (kind > 1) throw FormatError("bad action kind in dataset");
  a.kind = static_cast<ActionValue::Kind>(kind);
  a.index = r.u64();
  a.vector = get_reals(r);
  return a;
}

bool get_flag(ByteReader& r) {
  const std::uint8_t v = r.u8();
  if (v > 1) throw FormatError("bad boolean in dataset");
  return v == 1;
}

std::string encode_episode(const Episode& e) {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(e.source));
  w.u8(e.success ? 1 : 0);
  w.u64(e.seed);
  w.u64(e.transitions.size());
  for (const Transition& t : e.transitions) {
    put_observation(w, t.state);
    put_action(w, t.action);
    w.f64(t.reward);
    put_observation(w, t.next_state);
    w.u8(t.terminal ? 1 : 0);
    w.f64(t.behavior_log_density);
  }
  return w.take();
}

Episode decode_episode(std::string_view bytes) {
  ByteReader r(bytes);
  Episode e;
  const std::uint8_t source = r.u8();
  if (source > 1) throw FormatError("bad episode source in dataset");
  e.source = static_cast<EpisodeSource>(source);
  e.success = get_flag(r);
  e.seed = r.u64();
  const std::uint64_t n = r.u64();
  if (n > r.remaining()) throw FormatError("dataset episode truncated");
  e.transitions.resize(n);
  for (Transition& t : e.transitions) {
    t.state = get_observation(r);
    t.action = get_action(r);
    t.reward = r.f64();
    t.next_state = get_observation(r);
    t.terminal = get_flag(r);
    t.behavior_log_density = r.f64();
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes in dataset episode record");
  return e;
}

}  // namespace

OfflineDataset::OfflineDataset(DatasetMetadata metadata, std::vector<Episode> episodes)
    : metadata_(std::move(metadata)), episodes_(std::move(episodes)) {
  for (std::size_t e = 0; e < episodes_.size(); ++e) {
    for (std::size_t t = 0; t < episodes_[e].transitions.size(); ++t) {
      index_.emplace_back(static_cast<std::uint32_t>(e), static_cast<std::uint32_t>(t));
    }
  }
}

double OfflineDataset::success_rate() const {
  if (episodes_.empty()) return 0.0;
  std::size_t wins = 0;
  for (const auto& e : episodes_) wins += e.success ? 1 : 0;
  return static_cast<double>(wins) / static_cast<double>(episodes_.size());
}

OfflineDataset OfflineDataset::prefix(std::size_t n) const {
  if (n > episodes_.size()) {
    throw ContractViolation("dataset has " + std::to_string(episodes_.size()) + " episodes, " + std::to_string(n) +
                            " requested");
  }
  return OfflineDataset(metadata_, {episodes_.begin(), episodes_.begin() + static_cast<std::ptrdiff_t>(n)});
}

OfflineDataset dataset_collect(const envs::Environment& env, const envs::TeacherPolicy& teacher,
                               std::size_t n_episodes, bool deterministic, const RandomStream& stream) {
  if (n_episodes == 0) throw ContractViolation("dataset_collect needs at least one episode");
  auto local = env.clone();
  const ActionFn act = deterministic
                           ? ActionFn([&](const Observation& o, RandomStream&) { return teacher.mode(o); })
                           : ActionFn([&](const Observation& o, RandomStream& s) { return teacher.sample(o, s); });
  const LogDensityFn density = [&](const Observation& o, const ActionValue& a) { return teacher.log_density(o, a); };
  std::vector<Episode> episodes;
  episodes.reserve(n_episodes);
  for (std::size_t i = 0; i < n_episodes; ++i) {
    RandomStream layout = stream.derive(2 * i);
    RandomStream actions = stream.derive(2 * i + 1);
    Episode e = rollout_episode(*local, act, layout, actions, EpisodeSource::kTeacherOffline, density);
    e.seed = i;
    episodes.push_back(std::move(e));
  }
  DatasetMetadata meta{env.spec().id, std::string(envs::to_string(teacher.tier())), deterministic, stream.seed(),
                       teacher.epsilon()};
  return OfflineDataset(std::move(meta), std::move(episodes));
}

std::string serialize_dataset(const OfflineDataset& dataset) {
  ByteWriter header;
  const auto& m = dataset.metadata();
  header.str(m.env_id);
  header.str(m.teacher_tier);
  header.u8(m.deterministic ? 1 : 0);
  header.u64(m.seed);
  header.f64(m.teacher_epsilon);
  header.u64(dataset.episode_count());

  ByteWriter w;
  w.bytes(kMagic);
  w.u32(kDatasetVersion);
  w.u64(header.data().size());
  w.bytes(header.data());
  for (const Episode& e : dataset.episodes()) {
    const std::string record = encode_episode(e);
    w.u64(record.size());
    w.bytes(record);
  }
  return w.take();
}

OfflineDataset deserialize_dataset(std::string_view bytes) {
  ByteReader r(bytes);
  if (bytes.size() < kMagic.size() || r.bytes(kMagic.size()) != kMagic) throw FormatError("not a pft dataset");
  const std::uint32_t version = r.u32();
  if (version != kDatasetVersion) {
    throw FormatError("dataset format version " + std::to_string(version) + " is not supported (expected " +
                      std::to_string(kDatasetVersion) + ")");
  }
  const std::uint64_t header_len = r.u64();
  if (header_len > r.remaining()) throw FormatError("dataset header truncated");
  ByteReader h(r.bytes(header_len));
  DatasetMetadata m;
  std::uint64_t count = 0;
  try {
    m.env_id = h.str();
    m.teacher_tier = h.str();
    m.deterministic = get_flag(h);
    m.seed = h.u64();
    m.teacher_epsilon = h.f64();
    count = h.u64();
  } catch (const FormatError& e) {
    throw FormatError(std::string("corrupt dataset header: ") + e.what());
  }
  if (h.remaining() != 0) throw FormatError("corrupt dataset header: trailing bytes");
  std::vector<Episode> episodes;
  for (std::uint64_t i = 0; i < count; ++i) {
    if (r.remaining() < 8) {
      throw FormatError("dataset truncated: " + std::to_string(i) + " of " + std::to_string(count) + " episodes");
    }
    const std::uint64_t len = r.u64();
    if (len > r.remaining()) throw FormatError("dataset truncated inside episode " + std::to_string(i));
    episodes.push_back(decode_episode(r.bytes(len)));
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes after dataset");
  return OfflineDataset(std::move(m), std::move(episodes));
}

void save_dataset(const OfflineDataset& dataset, const std::string& path) {
  write_file_atomic(path, serialize_dataset(dataset));
}

OfflineDataset load_dataset(const std::string& path) { return deserialize_dataset(read_file(path)); }

}  // namespace pft::datastore
