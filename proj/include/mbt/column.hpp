#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace mbt {

/// A per-bar value series with a warm-up/degenerate mask. `mask[i] != 0`
/// means the value at row i is undefined (rolling warm-up, zero-volume
/// window, ...). Values under the mask are zero-filled and must not be used.
struct FeatureColumn {
  std::string name;
  std::vector<double> values;
  std::vector<char> mask;

  FeatureColumn() = default;
  FeatureColumn(std::string n, std::size_t rows)
      : name(std::move(n)), values(rows, 0.0), mask(rows, 1) {}

  std::size_t size() const noexcept { return values.size(); }
  bool defined(std::size_t i) const noexcept { return mask[i] == 0; }

  void set(std::size_t i, double v) noexcept {
    values[i] = v;
    mask[i] = 0;
  }
};

}  // namespace mbt
