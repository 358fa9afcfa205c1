#include "pft/envs/grid_stack.hpp"

#include <cstdlib>
#include <string>

#include "pft/core/error.hpp"

namespace pft::envs {

namespace {

std::size_t manhattan(std::size_t a, std::size_t b) {
  const auto ra = static_cast<long>(a / GridStackEnv::kSide);
  const auto ca = static_cast<long>(a % GridStackEnv::kSide);
  const auto rb = static_cast<long>(b / GridStackEnv::kSide);
  const auto cb = static_cast<long>(b % GridStackEnv::kSide);
  return static_cast<std::size_t>(std::labs(ra - rb) + std::labs(ca - cb));
}

std::size_t move(std::size_t cell, std::size_t action) {
  const std::size_t row = cell / GridStackEnv::kSide;
  const std::size_t col = cell % GridStackEnv::kSide;
  switch (action) {
    case GridStackEnv::kUp:
      return row > 0 ? cell - GridStackEnv::kSide : cell;
    case GridStackEnv::kDown:
      return row + 1 < GridStackEnv::kSide ? cell + GridStackEnv::kSide : cell;
    case GridStackEnv::kLeft:
      return col > 0 ? cell - 1 : cell;
    case GridStackEnv::kRight:
      return col + 1 < GridStackEnv::kSide ? cell + 1 : cell;
    default:
      return cell;
  }
}

}  // namespace

GridStackEnv::GridStackEnv() {
  spec_.id = "grid-stack";
  spec_.observation_kind = Observation::Kind::kDiscrete;
  spec_.state_count = kStateCount;
  spec_.action_kind = ActionValue::Kind::kDiscrete;
  spec_.action_count = kActionCount;
  spec_.horizon = kHorizon;
}

Observation GridStackEnv::reset(RandomStream& stream) {
  // Partial Fisher-Yates: the first four entries are a uniform draw of four
  // distinct cells in order.
  std::array<std::size_t, kCells> cells{};
  for (std::size_t i = 0; i < kCells; ++i) cells[i] = i;
  for (std::size_t i = 0; i < 4; ++i) {
    const std::size_t j = i + stream.uniform_index(kCells - i);
    std::swap(cells[i], cells[j]);
  }
  return reset_to({cells[0], cells[1], cells[2], cells[3]});
}

Observation GridStackEnv::reset_to(const Layout& layout) {
  const std::array<std::size_t, 4> cells{layout.agent, layout.red, layout.blue, layout.green};
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i] >= kCells) throw ContractViolation("grid layout cell out of range");
    for (std::size_t j = i + 1; j < cells.size(); ++j) {
      if (cells[i] == cells[j]) throw ContractViolation("grid layout cells must be distinct");
    }
  }
  layout_ = layout;
  carrying_ = false;
  steps_ = 0;
  done_ = false;
  return Observation::discrete(encode(state()));
}

GridStackEnv::Outcome GridStackEnv::transition(const State& s, std::size_t action) {
  Outcome out{s, 0.0, false};
  switch (action) {
    case kUp:
    case kDown:
    case kLeft:
    case kRight:
      out.next.agent = move(s.agent, action);
      break;
    case kPickup:
      if (!s.carrying() && s.red == s.agent) out.next.red = kCarried;
      break;
    case kDrop:
      if (s.carrying()) {
        if (s.agent == s.blue) {
          out.reward = 1.0;
          out.success = true;
        } else {
          out.next.red = s.agent;
        }
      }
      break;
    default:
      throw ContractViolation("grid action index out of range: " + std::to_string(action));
  }
  return out;
}

StepResult GridStackEnv::step(const ActionValue& action) {
  if (done_) throw ContractViolation("step called on a terminated grid episode");
  if (!action.is_discrete()) throw ContractViolation("grid-stack takes discrete actions");
  const Outcome out = transition(state(), action.index);
  layout_.agent = out.next.agent;
  carrying_ = out.next.carrying();
  if (!carrying_) layout_.red = out.success ? layout_.blue : out.next.red;
  ++steps_;

  StepResult result;
  result.reward = out.reward;
  result.success = out.success;
  result.terminal = out.success || steps_ >= kHorizon;
  result.truncated = result.terminal && !out.success;
  done_ = result.terminal;
  result.observation = Observation::discrete(encode(out.next));
  return result;
}

ShapingDistances GridStackEnv::distances() const {
  const std::size_t object = carrying_ ? layout_.agent : layout_.red;
  return {carrying_ ? 0.0 : static_cast<double>(manhattan(layout_.agent, layout_.red)),
          static_cast<double>(manhattan(object, layout_.blue))};
}

std::unique_ptr<Environment> GridStackEnv::clone() const {
  return std::make_unique<GridStackEnv>(*this);
}

std::size_t GridStackEnv::encode(const State& s) {
  return s.blue * kLayoutStates + layout_index(s.agent, s.red);
}

GridStackEnv::State GridStackEnv::decode(std::size_t index) {
  if (index >= kStateCount) throw ContractViolation("grid observation index out of range");
  const std::size_t within = index % kLayoutStates;
  return {index / kLayoutStates, within / (kCells + 1), within % (kCells + 1)};
}

}  // namespace pft::envs
