#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "pft/approx/gradient.hpp"
#include "pft/core/random.hpp"

namespace pft::approx {

enum class TrunkKind { kTabular, kMlp };

// What a trunk consumes: a row index (tabular) or a real vector (MLP).
struct TrunkInput {
  std::size_t index = 0;
  std::span<const double> features;
};

// Activations recorded by forward() for the matching backward() call.
struct Tape {
  std::size_t index = 0;
  std::vector<std::vector<double>> layers;  // layers[0] = input, back() = output
  std::span<const double> output;
};

// A function from inputs to a fixed-size output vector, parameterized by a
// flat vector it does not own. Either a lookup table with one row per input
// index, or a tanh multilayer perceptron with a linear output layer.
class Trunk {
 public:
  static Trunk tabular(std::size_t rows, std::size_t outputs);
  static Trunk mlp(std::size_t inputs, std::vector<std::size_t> hidden, std::size_t outputs);

  TrunkKind kind() const { return kind_; }
  std::size_t input_dim() const { return sizes_.front(); }  // rows for tabular
  std::size_t output_dim() const { return sizes_.back(); }
  std::size_t parameter_count() const { return parameter_count_; }
  // Tabular: {rows, outputs}. MLP: {inputs, hidden..., outputs}.
  const std::vector<std::size_t>& layer_sizes() const { return sizes_; }
  std::string describe() const;

  // Tabular tables start at zero; MLP layers draw U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  void initialize(std::span<double> params, RandomStream& stream) const;

  std::span<const double> forward(std::span<const double> params, const TrunkInput& input, Tape& tape) const;
  // Adds d(loss)/d(params) given d(loss)/d(output) into grad.
  void backward(std::span<const double> params, const Tape& tape, std::span<const double> d_output,
                GradientReport& grad) const;

  // Gradient workspace shaped for this trunk (row-sparse for tables).
  GradientReport make_gradient() const;

 private:
  Trunk(TrunkKind kind, std::vector<std::size_t> sizes);

  TrunkKind kind_;
  std::vector<std::size_t> sizes_;
  std::size_t parameter_count_ = 0;
};

}  // namespace pft::approx
