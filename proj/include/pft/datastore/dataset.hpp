#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pft/core/random.hpp"
#include "pft/core/types.hpp"
#include "pft/envs/environment.hpp"
#include "pft/envs/teacher.hpp"

namespace pft::datastore {

struct DatasetMetadata {
  std::string env_id;
  std::string teacher_tier;
  bool deterministic = false;
  std::uint64_t seed = 0;
  double teacher_epsilon = 0.0;
  friend bool operator==(const DatasetMetadata&, const DatasetMetadata&) = default;
};

// Teacher episodes collected before training. Immutable once built; the
// flat index maps transition i to its (episode, step).
class OfflineDataset {
 public:
  OfflineDataset() = default;
  OfflineDataset(DatasetMetadata metadata, std::vector<Episode> episodes);

  const DatasetMetadata& metadata() const { return metadata_; }
  std::span<const Episode> episodes() const { return episodes_; }
  std::size_t episode_count() const { return episodes_.size(); }
  std::size_t transition_count() const { return index_.size(); }
  bool empty() const { return index_.empty(); }
  const Transition& transition(std::size_t i) const {
    const auto [e, t] = index_[i];
    return episodes_[e].transitions[t];
  }
  double success_rate() const;
  // The first n episodes as a dataset of their own.
  OfflineDataset prefix(std::size_t n) const;

  friend bool operator==(const OfflineDataset& a, const OfflineDataset& b) {
    return a.metadata_ == b.metadata_ && a.episodes_ == b.episodes_;
  }

 private:
  DatasetMetadata metadata_;
  std::vector<Episode> episodes_;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> index_;
};

// Rolls out the teacher for n episodes (mode actions when deterministic).
// Episode i uses layout stream stream.derive(2i) and action stream
// stream.derive(2i+1). behavior_log_density is the teacher's log-density of
// the executed action.
OfflineDataset dataset_collect(const envs::Environment& env, const envs::TeacherPolicy& teacher,
                               std::size_t n_episodes, bool deterministic, const RandomStream& stream);

// Dataset file layout (little-endian, floats as IEEE-754 binary64):
//
//   "PFTDATA1"  u32 version
//   u64 header_len, header:
//     str env_id, str teacher_tier, u8 deterministic, u64 seed,
//     f64 teacher_epsilon, u64 episode_count
//   episode_count x { u64 record_len, record:
//     u8 source, u8 success, u64 seed, u64 n_transitions,
//     n_transitions x { obs state, action, f64 reward, obs next, u8 terminal,
//                       f64 behavior_log_density } }
//   obs    = u8 kind, u64 index, u32 n, n x f64
//   action = u8 kind, u64 index, u32 n, n x f64
//
// Strings are u32 length + bytes.
inline constexpr std::uint32_t kDatasetVersion = 1;

std::string serialize_dataset(const OfflineDataset& dataset);
// Throws FormatError on a bad magic, version mismatch, corrupt header or
// truncated records; never returns a partial dataset.
OfflineDataset deserialize_dataset(std::string_view bytes);

void save_dataset(const OfflineDataset& dataset, const std::string& path);
OfflineDataset load_dataset(const std::string& path);

}  // namespace pft::datastore
