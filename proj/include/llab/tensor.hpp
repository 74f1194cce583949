#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace llab {

// Dense row-major tensor of doubles. Everything runs at float64: the
// analyses are numerical comparisons and the models are desk-scale, so
// precision wins over speed.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> values;

  Tensor() = default;
  Tensor(std::vector<std::size_t> s, double fill = 0.0);

  std::size_t size() const { return values.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t dim(std::size_t i) const { return shape.at(i); }

  double* data() { return values.data(); }
  const double* data() const { return values.data(); }

  // Elements per sample, treating axis 0 as the batch axis.
  std::size_t sample_size() const;

  bool all_finite() const;
  std::string shape_str() const;
};

std::size_t shape_product(const std::vector<std::size_t>& shape);

}  // namespace llab
