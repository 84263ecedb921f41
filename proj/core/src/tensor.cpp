#include "stereovid/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace stereovid {

std::int64_t shape_size(const std::vector<int>& shape) {
  std::int64_t n = 1;
  for (size_t a = 0; a < shape.size(); ++a) {
    if (shape[a] < 1) {
      throw std::invalid_argument("tensor shape " + shape_to_string(shape) +
                                  ": extent of axis " + std::to_string(a) +
                                  " must be >= 1");
    }
    n *= shape[a];
  }
  return n;
}

std::string shape_to_string(const std::vector<int>& shape) {
  std::ostringstream os;
  os << '[';
  for (size_t a = 0; a < shape.size(); ++a) {
    if (a) os << ',';
    os << shape[a];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(std::vector<int> shape, float fill)
    : shape_(std::move(shape)),
      data_(static_cast<size_t>(shape_size(shape_)), fill) {}

Tensor Tensor::from_data(std::vector<int> shape, std::vector<float> values) {
  const std::int64_t n = shape_size(shape);
  if (n != static_cast<std::int64_t>(values.size())) {
    throw std::invalid_argument(
        "tensor shape " + shape_to_string(shape) + " holds " +
        std::to_string(n) + " values, got " + std::to_string(values.size()));
  }
  Tensor t;
  t.shape_ = std::move(shape);
  t.data_ = std::move(values);
  return t;
}

int Tensor::extent(int axis) const {
  if (axis < 0 || axis >= rank()) {
    throw std::invalid_argument("axis " + std::to_string(axis) +
                                " out of range for shape " + shape_str());
  }
  return shape_[axis];
}

void Tensor::reshape(std::vector<int> shape) {
  if (shape_size(shape) != size()) {
    throw std::invalid_argument("reshape " + shape_str() + " -> " +
                                shape_to_string(shape) + " changes size");
  }
  shape_ = std::move(shape);
}

void Tensor::fill(float value) { std::fill(data_.begin(), data_.end(), value); }

}  // namespace stereovid
