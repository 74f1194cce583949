#include "llab/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace llab {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

Tensor::Tensor(std::vector<std::size_t> s, double fill)
    : shape(std::move(s)), values(shape_product(shape), fill) {
  for (std::size_t d : shape) {
    if (d == 0) throw std::invalid_argument("tensor shape has a zero dimension");
  }
}

std::size_t Tensor::sample_size() const {
  if (shape.empty()) return 0;
  return size() / shape[0];
}

bool Tensor::all_finite() const {
  for (double v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ")";
  return os.str();
}

}  // namespace llab
