#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

namespace pft::approx {

// Parameter gradient aligned with a flat parameter vector, plus the loss it
// came from. Tabular trunks only touch a few rows per batch, so the report
// may be row-sparse: when row_width > 0, every nonzero entry lies inside one
// of `rows` (each row spans [r * row_width, (r + 1) * row_width)).
struct GradientReport {
  std::vector<double> gradient;
  double loss = 0.0;
  std::size_t row_width = 0;
  std::vector<std::size_t> rows;

  GradientReport() = default;
  GradientReport(std::size_t size, std::size_t sparse_row_width)
      : gradient(size, 0.0), row_width(sparse_row_width) {}

  bool sparse() const { return row_width > 0; }

  void touch_row(std::size_t row) { rows.push_back(row); }

  // Sorts and deduplicates the touched-row list.
  void finalize() {
    std::sort(rows.begin(), rows.end());
    rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  }

  // Zeroes the gradient (only the touched rows when sparse) and the loss.
  void clear() {
    if (sparse()) {
      for (std::size_t r : rows) {
        std::fill_n(gradient.begin() + static_cast<std::ptrdiff_t>(r * row_width), row_width, 0.0);
      }
      rows.clear();
    } else {
      std::fill(gradient.begin(), gradient.end(), 0.0);
    }
    loss = 0.0;
  }
};

}  // namespace pft::approx
