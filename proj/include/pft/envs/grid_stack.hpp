#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

#include "pft/envs/environment.hpp"

namespace pft::envs {

// 5x5 pick-and-place: carry the red block onto the blue block. Green is a
// distractor that shares the floor but never changes the dynamics, so it is
// left out of the discrete state index.
//
// Cells are row-major (cell = row * 5 + col, row 0 at the top).
// Discrete observation index: blue * 650 + agent * 26 + (carrying ? 25 : red).
class GridStackEnv final : public Environment {
 public:
  static constexpr std::size_t kSide = 5;
  static constexpr std::size_t kCells = kSide * kSide;
  static constexpr std::size_t kCarried = kCells;                  // red slot value
  static constexpr std::size_t kLayoutStates = kCells * (kCells + 1);  // 650
  static constexpr std::size_t kStateCount = kCells * kLayoutStates;   // 16250
  static constexpr std::size_t kHorizon = 50;

  enum Action : std::size_t { kUp = 0, kDown, kLeft, kRight, kPickup, kDrop, kActionCount };

  struct Layout {
    std::size_t agent = 0;
    std::size_t red = 0;
    std::size_t blue = 0;
    std::size_t green = 0;
    friend bool operator==(const Layout&, const Layout&) = default;
  };

  // Decoded Markov state: blue target plus the per-layout (agent, red) pair.
  struct State {
    std::size_t blue = 0;
    std::size_t agent = 0;
    std::size_t red = 0;  // kCarried while carrying
    bool carrying() const { return red == kCarried; }
    friend bool operator==(const State&, const State&) = default;
  };

  GridStackEnv();

  const EnvSpec& spec() const override { return spec_; }
  // Draws agent, red, blue and green on four distinct cells, uniformly.
  Observation reset(RandomStream& stream) override;
  Observation reset_to(const Layout& layout);
  StepResult step(const ActionValue& action) override;
  ShapingDistances distances() const override;
  bool done() const override { return done_; }
  std::unique_ptr<Environment> clone() const override;

  const Layout& layout() const { return layout_; }
  State state() const { return {layout_.blue, layout_.agent, carrying_ ? kCarried : layout_.red}; }
  std::size_t steps() const { return steps_; }

  static std::size_t encode(const State& s);
  static State decode(std::size_t index);
  static std::size_t layout_index(std::size_t agent, std::size_t red) { return agent * (kCells + 1) + red; }

  // Pure transition function shared with the dynamic-programming solver.
  struct Outcome {
    State next;
    double reward = 0.0;
    bool success = false;
  };
  static Outcome transition(const State& s, std::size_t action);

 private:
  EnvSpec spec_;
  Layout layout_;
  bool carrying_ = false;
  std::size_t steps_ = 0;
  bool done_ = true;
};

}  // namespace pft::envs
