#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "coopred/nn/tensor.hpp"
#include "coopred/rng.hpp"

namespace coopred::nn {

enum class Init { kZero, kOnes, kXavier, kNormalSmall };

/// Weight plus its gradient accumulator and Adam moments.
template <typename T>
struct ParamEntry {
  Tensor<T> value;
  Tensor<T> grad;
  Tensor<T> m;
  Tensor<T> v;
};

/// Named parameter registry. Creation order is recorded so that iteration,
/// initialization draws, and serialization are all deterministic.
template <typename T>
class ParamStore {
 public:
  explicit ParamStore(uint64_t seed) : rng_(seed) {}

  Tensor<T>& create(const std::string& name, int rows, int cols, Init init) {
    if (map_.count(name)) throw std::invalid_argument("param already exists: " + name);
    ParamEntry<T> e;
    e.value = Tensor<T>(rows, cols);
    e.grad = Tensor<T>(rows, cols);
    e.m = Tensor<T>(rows, cols);
    e.v = Tensor<T>(rows, cols);
    switch (init) {
      case Init::kZero:
        break;
      case Init::kOnes:
        for (auto& x : e.value.data) x = T(1);
        break;
      case Init::kXavier: {
        const double limit = std::sqrt(6.0 / (rows + cols));
        for (auto& x : e.value.data) x = static_cast<T>(rng_.uniform(-limit, limit));
        break;
      }
      case Init::kNormalSmall:
        for (auto& x : e.value.data) x = static_cast<T>(rng_.normal(0.0, 0.02));
        break;
    }
    order_.push_back(name);
    return map_.emplace(name, std::move(e)).first->second.value;
  }

  bool has(const std::string& name) const { return map_.count(name) != 0; }

  ParamEntry<T>& entry(const std::string& name) {
    auto it = map_.find(name);
    if (it == map_.end()) throw std::out_of_range("no such param: " + name);
    return it->second;
  }
  const ParamEntry<T>& entry(const std::string& name) const {
    auto it = map_.find(name);
    if (it == map_.end()) throw std::out_of_range("no such param: " + name);
    return it->second;
  }

  const std::vector<std::string>& names() const { return order_; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& name : order_) n += map_.at(name).value.size();
    return n;
  }

  void zero_grads() {
    for (const auto& name : order_) map_.at(name).grad.zero();
  }

  void scale_grads(T f) {
    for (const auto& name : order_)
      for (auto& x : map_.at(name).grad.data) x *= f;
  }

 private:
  Rng rng_;
  std::vector<std::string> order_;
  std::unordered_map<std::string, ParamEntry<T>> map_;
};

}  // namespace coopred::nn
