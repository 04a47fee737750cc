#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace coopred::nn {

/// Dense 2-D row-major tensor.
template <typename T>
struct Tensor {
  int rows = 0;
  int cols = 0;
  std::vector<T> data;

  Tensor() = default;
  Tensor(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, T(0)) {
    if (r < 0 || c < 0) throw std::invalid_argument("tensor: negative shape");
  }

  std::size_t size() const { return data.size(); }
  T* row(int i) { return data.data() + static_cast<std::size_t>(i) * cols; }
  const T* row(int i) const { return data.data() + static_cast<std::size_t>(i) * cols; }
  T& at(int i, int j) { return data[static_cast<std::size_t>(i) * cols + j]; }
  const T& at(int i, int j) const { return data[static_cast<std::size_t>(i) * cols + j]; }
  void zero() { std::fill(data.begin(), data.end(), T(0)); }
  bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }
};

}  // namespace coopred::nn
