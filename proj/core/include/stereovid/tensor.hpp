#pragma once

#include <cassert>
#include <cstdint>
#include <string>
#include <vector>

namespace stereovid {

/// Validates that every extent is >= 1 and returns their product.
std::int64_t shape_size(const std::vector<int>& shape);

std::string shape_to_string(const std::vector<int>& shape);

// Dense row-major float32 array. Immutable shape, mutable values.
// All numeric kernels in this library operate on this type.
class Tensor {
public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape, float fill = 0.0f);
  static Tensor from_data(std::vector<int> shape, std::vector<float> values);

  int rank() const { return static_cast<int>(shape_.size()); }
  const std::vector<int>& shape() const { return shape_; }
  int extent(int axis) const;
  std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  float* data() { return data_.data(); }
  const float* data() const { return data_.data(); }
  const std::vector<float>& values() const { return data_; }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  std::string shape_str() const { return shape_to_string(shape_); }

  /// Reinterprets the value buffer under a new shape of identical size.
  void reshape(std::vector<int> shape);

  template <class... Ix>
  float& at(Ix... ix) {
    return data_[offset_of(ix...)];
  }
  template <class... Ix>
  const float& at(Ix... ix) const {
    return data_[offset_of(ix...)];
  }

  void fill(float value);

private:
  template <class... Ix>
  std::int64_t offset_of(Ix... ix) const {
    constexpr int n = sizeof...(Ix);
    assert(n == static_cast<int>(shape_.size()));
    const std::int64_t idx[n] = {static_cast<std::int64_t>(ix)...};
    std::int64_t off = 0;
    for (int a = 0; a < n; ++a) {
      assert(idx[a] >= 0 && idx[a] < shape_[a]);
      off = off * shape_[a] + idx[a];
    }
    return off;
  }

  std::vector<int> shape_;
  std::vector<float> data_;
};

}  // namespace stereovid
