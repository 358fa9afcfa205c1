#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "pft/approx/policy.hpp"
#include "pft/approx/q_function.hpp"

namespace pft::approx {

// Checkpoint byte layout (all integers little-endian, floats IEEE-754 binary64):
//
//   "PFTCKPT1"                      8 bytes magic
//   u32 version                     currently 1
//   u32 block_count
//   block_count x {
//     u32 len, bytes name           e.g. "policy", "critic"
//     u32 len, bytes architecture   e.g. "categorical/tabular:16250x6"
//     u32 rank, rank x u64 dims     trunk layer sizes
//     u64 n, n x f64 parameters
//   }
struct CheckpointBlock {
  std::string name;
  std::string architecture;
  std::vector<std::uint64_t> shape;
  std::vector<double> parameters;

  friend bool operator==(const CheckpointBlock&, const CheckpointBlock&) = default;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string encode_checkpoint(const std::vector<CheckpointBlock>& blocks);
std::vector<CheckpointBlock> decode_checkpoint(std::string_view bytes);

CheckpointBlock checkpoint_block(std::string name, const ParametricPolicy& policy);
CheckpointBlock checkpoint_block(std::string name, const QFunction& q);
// Copies parameters after checking architecture and length agree.
void load_block(const CheckpointBlock& block, ParametricPolicy& policy);
void load_block(const CheckpointBlock& block, QFunction& q);

}  // namespace pft::approx
