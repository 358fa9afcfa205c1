#include "pft/approx/trunk.hpp"

#include <cmath>

#include "pft/core/error.hpp"

namespace pft::approx {

Trunk::Trunk(TrunkKind kind, std::vector<std::size_t> sizes) : kind_(kind), sizes_(std::move(sizes)) {
  if (kind_ == TrunkKind::kTabular) {
    parameter_count_ = sizes_[0] * sizes_[1];
  } else {
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) parameter_count_ += sizes_[l + 1] * (sizes_[l] + 1);
  }
}

Trunk Trunk::tabular(std::size_t rows, std::size_t outputs) {
  if (rows == 0 || outputs == 0) throw ContractViolation("tabular trunk needs rows and outputs");
  return Trunk(TrunkKind::kTabular, {rows, outputs});
}

Trunk Trunk::mlp(std::size_t inputs, std::vector<std::size_t> hidden, std::size_t outputs) {
  if (inputs == 0 || outputs == 0) throw ContractViolation("mlp trunk needs inputs and outputs");
  std::vector<std::size_t> sizes{inputs};
  for (std::size_t h : hidden) {
    if (h == 0) throw ContractViolation("mlp hidden layers must be nonempty");
    sizes.push_back(h);
  }
  sizes.push_back(outputs);
  return Trunk(TrunkKind::kMlp, std::move(sizes));
}

std::string Trunk::describe() const {
  std::string out = kind_ == TrunkKind::kTabular ? "tabular" : "mlp";
  for (std::size_t i = 0; i < sizes_.size(); ++i) out += (i == 0 ? ":" : "x") + std::to_string(sizes_[i]);
  return out;
}

void Trunk::initialize(std::span<double> params, RandomStream& stream) const {
  if (params.size() != parameter_count_) throw ContractViolation("trunk parameter length mismatch");
  if (kind_ == TrunkKind::kTabular) {
    std::fill(params.begin(), params.end(), 0.0);
    return;
  }
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const std::size_t n = sizes_[l + 1] * (sizes_[l] + 1);
    const double bound = 1.0 / std::sqrt(static_cast<double>(sizes_[l]));
    for (std::size_t i = 0; i < n; ++i) params[offset + i] = stream.uniform(-bound, bound);
    offset += n;
  }
}

std::span<const double> Trunk::forward(std::span<const double> params, const TrunkInput& input, Tape& tape) const {
  if (kind_ == TrunkKind::kTabular) {
    if (input.index >= sizes_[0]) throw ContractViolation("tabular trunk index out of range");
    tape.index = input.index;
    tape.output = params.subspan(input.index * sizes_[1], sizes_[1]);
    return tape.output;
  }
  if (input.features.size() != sizes_[0]) throw ContractViolation("mlp input dimension mismatch");
  tape.layers.resize(sizes_.size());
  tape.layers[0].assign(input.features.begin(), input.features.end());
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const std::size_t in = sizes_[l];
    const std::size_t out = sizes_[l + 1];
    const double* w = params.data() + offset;
    const double* b = w + out * in;
    const std::vector<double>& x = tape.layers[l];
    std::vector<double>& y = tape.layers[l + 1];
    y.resize(out);
    const bool hidden = l + 2 < sizes_.size();
    for (std::size_t o = 0; o < out; ++o) {
      double acc = b[o];
      const double* row = w + o * in;
      for (std::size_t i = 0; i < in; ++i) acc += row[i] * x[i];
      y[o] = hidden ? std::tanh(acc) : acc;
    }
    offset += out * (in + 1);
  }
  tape.output = tape.layers.back();
  return tape.output;
}

void Trunk::backward(std::span<const double> params, const Tape& tape, std::span<const double> d_output,
                     GradientReport& grad) const {
  if (d_output.size() != output_dim()) throw ContractViolation("trunk backward: output gradient size mismatch");
  if (grad.gradient.size() != parameter_count_) throw ContractViolation("trunk backward: gradient size mismatch");
  if (kind_ == TrunkKind::kTabular) {
    double* row = grad.gradient.data() + tape.index * sizes_[1];
    for (std::size_t o = 0; o < sizes_[1]; ++o) row[o] += d_output[o];
    if (grad.sparse()) grad.touch_row(tape.index);
    return;
  }
  // Walk layers from the output back, carrying d(loss)/d(layer pre-activation).
  std::vector<std::size_t> offsets(sizes_.size() - 1);
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    offsets[l] = offset;
    offset += sizes_[l + 1] * (sizes_[l] + 1);
  }
  std::vector<double> delta(d_output.begin(), d_output.end());
  std::vector<double> prev;
  for (std::size_t l = sizes_.size() - 1; l-- > 0;) {
    const std::size_t in = sizes_[l];
    const std::size_t out = sizes_[l + 1];
    const double* w = params.data() + offsets[l];
    double* gw = grad.gradient.data() + offsets[l];
    double* gb = gw + out * in;
    const std::vector<double>& x = tape.layers[l];
    for (std::size_t o = 0; o < out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      double* grow = gw + o * in;
      for (std::size_t i = 0; i < in; ++i) grow[i] += d * x[i];
      gb[o] += d;
    }
    if (l == 0) break;
    prev.assign(in, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      const double* row = w + o * in;
      for (std::size_t i = 0; i < in; ++i) prev[i] += d * row[i];
    }
    // x = tanh(pre) for hidden layers, so d pre = d x * (1 - x^2).
    for (std::size_t i = 0; i < in; ++i) prev[i] *= 1.0 - x[i] * x[i];
    delta.swap(prev);
  }
}

GradientReport Trunk::make_gradient() const {
  return GradientReport(parameter_count_, kind_ == TrunkKind::kTabular ? sizes_[1] : 0);
}

}  // namespace pft::approx
