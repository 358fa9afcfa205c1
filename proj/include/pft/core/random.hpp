#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace pft {

// A reproducible random source identified by (seed, stream_id). Two streams
// built from the same pair produce identical draw sequences; different
// stream ids are decorrelated through a SplitMix64 mix of the pair.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  // Child stream derived from this stream's identity (not its state).
  RandomStream derive(std::uint64_t sub_id) const;

  double uniform();                        // [0, 1)
  double uniform(double lo, double hi);    // [lo, hi)
  double normal();                         // N(0, 1)
  std::size_t uniform_index(std::size_t n);  // {0, ..., n-1}
  // Index drawn with probability proportional to weights[i] (weights >= 0).
  std::size_t categorical(std::span<const double> weights);
  std::uint64_t next_u64() { return engine_(); }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace pft
