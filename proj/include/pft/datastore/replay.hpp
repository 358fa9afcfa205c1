#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "pft/core/random.hpp"
#include "pft/core/types.hpp"
#include "pft/datastore/dataset.hpp"

namespace pft::datastore {

// FIFO ring of student transitions. Once full, each push evicts the oldest.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  std::uint64_t total_pushed() const { return pushed_; }

  void push(Transition t);
  // i-th stored transition, oldest first.
  const Transition& at(std::size_t i) const;

 private:
  std::size_t capacity_;
  std::vector<Transition> items_;
  std::size_t head_ = 0;  // index of the oldest item once full
  std::uint64_t pushed_ = 0;
};

// Time-varying offline proportion and temperature for offline-to-online
// training. Steps are gradient steps.
struct AwacSchedule {
  std::uint64_t t_temp_start = 0;
  std::uint64_t t_pure_offline = 1;
  std::uint64_t t_ramp_end = 2;
  double final_offline_fraction = 0.2;
  double initial_temperature = 1.0;
  double final_temperature = 0.1;

  // t_pure_offline = pure_fraction * planned, t_ramp_end = planned, and the
  // temperature ramp starts at 0.8 * t_pure_offline.
  static AwacSchedule for_planned_steps(std::uint64_t planned, double pure_fraction = 0.45);
  void validate() const;
};

struct AwacPoint {
  double offline_fraction = 1.0;
  double temperature = 1.0;
};

AwacPoint awac_fraction(const AwacSchedule& schedule, std::uint64_t gradient_step);

struct BatchRatio {
  std::size_t offline = 32;
  std::size_t online = 32;
  std::size_t total() const { return offline + online; }
  friend bool operator==(const BatchRatio&, const BatchRatio&) = default;
};

using TransitionRef = std::reference_wrapper<const Transition>;

struct MixedBatch {
  std::vector<TransitionRef> transitions;  // offline part first
  std::size_t offline_count = 0;
  std::size_t online_count = 0;
};

// Uniform sampling with replacement inside each store, in fixed per-store
// counts. With a schedule, the offline count is round(fraction * batch).
class MixedSampler {
 public:
  explicit MixedSampler(BatchRatio ratio, std::optional<AwacSchedule> schedule = std::nullopt);

  const BatchRatio& ratio() const { return ratio_; }
  const std::optional<AwacSchedule>& schedule() const { return schedule_; }
  BatchRatio ratio_at(std::uint64_t gradient_step) const;

  // Throws EmptyStore when a store with a positive count has no data.
  MixedBatch sample(const OfflineDataset* dataset, const ReplayBuffer* buffer, std::uint64_t gradient_step,
                    RandomStream& stream) const;

 private:
  BatchRatio ratio_;
  std::optional<AwacSchedule> schedule_;
};

}  // namespace pft::datastore
