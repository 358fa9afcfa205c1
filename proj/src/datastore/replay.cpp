#include "pft/datastore/replay.hpp"

#include <algorithm>
#include <cmath>

#include "pft/core/error.hpp"

namespace pft::datastore {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ContractViolation("replay capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
  ++pushed_;
  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
    return;
  }
  items_[head_] = std::move(t);
  head_ = (head_ + 1) % capacity_;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= items_.size()) throw ContractViolation("replay index out of range");
  return items_[(head_ + i) % items_.size()];
}

AwacSchedule AwacSchedule::for_planned_steps(std::uint64_t planned, double pure_fraction) {
  AwacSchedule s;
  s.t_ramp_end = std::max<std::uint64_t>(planned, 3);
  s.t_pure_offline = std::clamp<std::uint64_t>(
      static_cast<std::uint64_t>(std::llround(pure_fraction * static_cast<double>(s.t_ramp_end))), 2,
      s.t_ramp_end - 1);
  s.t_temp_start = std::min<std::uint64_t>(static_cast<std::uint64_t>(0.8 * static_cast<double>(s.t_pure_offline)),
                                           s.t_pure_offline - 1);
  s.validate();
  return s;
}

void AwacSchedule::validate() const {
  if (!(t_temp_start < t_pure_offline && t_pure_offline < t_ramp_end)) {
    throw ContractViolation("AWAC schedule needs t_temp_start < t_pure_offline < t_ramp_end");
  }
  if (!(final_offline_fraction >= 0.0 && final_offline_fraction <= 1.0)) {
    throw ContractViolation("AWAC final offline fraction must lie in [0, 1]");
  }
  if (!(initial_temperature > 0.0 && final_temperature > 0.0)) {
    throw ContractViolation("AWAC temperatures must be positive");
  }
}

AwacPoint awac_fraction(const AwacSchedule& s, std::uint64_t t) {
  auto lerp = [](double a, double b, double u) { return a + (b - a) * u; };
  AwacPoint p;
  if (t <= s.t_pure_offline) {
    p.offline_fraction = 1.0;
  } else if (t < s.t_ramp_end) {
    const double u = static_cast<double>(t - s.t_pure_offline) / static_cast<double>(s.t_ramp_end - s.t_pure_offline);
    p.offline_fraction = lerp(1.0, s.final_offline_fraction, u);
  } else {
    p.offline_fraction = s.final_offline_fraction;
  }
  if (t <= s.t_temp_start) {
    p.temperature = s.initial_temperature;
  } else if (t < s.t_pure_offline) {
    const double u = static_cast<double>(t - s.t_temp_start) / static_cast<double>(s.t_pure_offline - s.t_temp_start);
    p.temperature = lerp(s.initial_temperature, s.final_temperature, u);
  } else {
    p.temperature = s.final_temperature;
  }
  return p;
}

MixedSampler::MixedSampler(BatchRatio ratio, std::optional<AwacSchedule> schedule)
    : ratio_(ratio), schedule_(schedule) {
  if (ratio_.total() == 0) throw ContractViolation("batch size must be positive");
  if (schedule_) schedule_->validate();
}

BatchRatio MixedSampler::ratio_at(std::uint64_t gradient_step) const {
  if (!schedule_) return ratio_;
  const std::size_t total = ratio_.total();
  const double f = awac_fraction(*schedule_, gradient_step).offline_fraction;
  const auto offline = static_cast<std::size_t>(std::llround(f * static_cast<double>(total)));
  return {offline, total - offline};
}

MixedBatch MixedSampler::sample(const OfflineDataset* dataset, const ReplayBuffer* buffer,
                                std::uint64_t gradient_step, RandomStream& stream) const {
  const BatchRatio r = ratio_at(gradient_step);
  if (r.offline > 0 && (dataset == nullptr || dataset->empty())) {
    throw EmptyStore("batch needs " + std::to_string(r.offline) + " offline transitions but the dataset is empty");
  }
  if (r.online > 0 && (buffer == nullptr || buffer->empty())) {
    throw EmptyStore("batch needs " + std::to_string(r.online) + " online transitions but the replay is empty");
  }
  MixedBatch batch;
  batch.transitions.reserve(r.total());
  for (std::size_t i = 0; i < r.offline; ++i) {
    batch.transitions.push_back(std::cref(dataset->transition(stream.uniform_index(dataset->transition_count()))));
  }
  for (std::size_t i = 0; i < r.online; ++i) {
    batch.transitions.push_back(std::cref(buffer->at(stream.uniform_index(buffer->size()))));
  }
  batch.offline_count = r.offline;
  batch.online_count = r.online;
  return batch;
}

}  // namespace pft::datastore
