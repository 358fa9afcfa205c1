#include "pft/approx/checkpoint.hpp"

#include <algorithm>

#include "pft/core/binary_io.hpp"
#include "pft/core/error.hpp"

namespace pft::approx {

namespace {

constexpr std::string_view kMagic = "PFTCKPT1";

std::vector<std::uint64_t> shape_of(const Trunk& trunk) {
  return {trunk.layer_sizes().begin(), trunk.layer_sizes().end()};
}

void load_parameters(const CheckpointBlock& block, const std::string& architecture, std::span<double> params) {
  if (block.architecture != architecture) {
    throw FormatError("checkpoint block '" + block.name + "' is " + block.architecture + ", expected " +
                      architecture);
  }
  if (block.parameters.size() != params.size()) throw FormatError("checkpoint parameter count mismatch");
  std::copy(block.parameters.begin(), block.parameters.end(), params.begin());
}

}  // namespace

std::string encode_checkpoint(const std::vector<CheckpointBlock>& blocks) {
  ByteWriter w;
  w.bytes(kMagic);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(blocks.size()));
  for (const auto& b : blocks) {
    w.str(b.name);
    w.str(b.architecture);
    w.u32(static_cast<std::uint32_t>(b.shape.size()));
    for (auto d : b.shape) w.u64(d);
    w.u64(b.parameters.size());
    for (double p : b.parameters) w.f64(p);
  }
  return w.take();
}

std::vector<CheckpointBlock> decode_checkpoint(std::string_view bytes) {
  ByteReader r(bytes);
  if (bytes.size() < kMagic.size() || r.bytes(kMagic.size()) != kMagic) throw FormatError("not a pft checkpoint");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));
  const std::uint32_t count = r.u32();
  std::vector<CheckpointBlock> blocks;
  for (std::uint32_t i = 0; i < count; ++i) {
    CheckpointBlock b;
    b.name = r.str();
    b.architecture = r.str();
    const std::uint32_t rank = r.u32();
    for (std::uint32_t k = 0; k < rank; ++k) b.shape.push_back(r.u64());
    const std::uint64_t n = r.u64();
    if (n > r.remaining() / 8) throw FormatError("checkpoint parameter block truncated");
    b.parameters.resize(n);
    for (auto& p : b.parameters) p = r.f64();
    blocks.push_back(std::move(b));
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes after checkpoint");
  return blocks;
}

CheckpointBlock checkpoint_block(std::string name, const ParametricPolicy& policy) {
  return {std::move(name), policy.architecture(), shape_of(policy.trunk()),
          {policy.parameters().begin(), policy.parameters().end()}};
}

CheckpointBlock checkpoint_block(std::string name, const QFunction& q) {
  return {std::move(name), q.architecture(), shape_of(q.trunk()), {q.parameters().begin(), q.parameters().end()}};
}

void load_block(const CheckpointBlock& block, ParametricPolicy& policy) {
  load_parameters(block, policy.architecture(), policy.parameters());
}

void load_block(const CheckpointBlock& block, QFunction& q) { load_parameters(block, q.architecture(), q.parameters()); }

}  // namespace pft::approx
