#pragma once

#include <cmath>
#include <cstdint>

#include "coopred/nn/params.hpp"

namespace coopred::nn {

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-6;
};

/// AdamW with decoupled weight decay. The step counter is exposed so
/// checkpoints can resume bias correction exactly.
template <typename T>
class AdamW {
 public:
  explicit AdamW(AdamWConfig cfg = {}) : cfg_(cfg) {}

  std::int64_t step_count() const { return t_; }
  void set_step_count(std::int64_t t) { t_ = t; }
  const AdamWConfig& config() const { return cfg_; }

  void step(ParamStore<T>& store, double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (const auto& name : store.names()) {
      auto& e = store.entry(name);
      for (std::size_t i = 0; i < e.value.size(); ++i) {
        const double g = static_cast<double>(e.grad.data[i]);
        const double m = cfg_.beta1 * static_cast<double>(e.m.data[i]) + (1.0 - cfg_.beta1) * g;
        const double v = cfg_.beta2 * static_cast<double>(e.v.data[i]) + (1.0 - cfg_.beta2) * g * g;
        e.m.data[i] = static_cast<T>(m);
        e.v.data[i] = static_cast<T>(v);
        const double update = (m / bc1) / (std::sqrt(v / bc2) + cfg_.eps) +
                              cfg_.weight_decay * static_cast<double>(e.value.data[i]);
        e.value.data[i] = static_cast<T>(static_cast<double>(e.value.data[i]) - lr * update);
      }
    }
  }

 private:
  AdamWConfig cfg_;
  std::int64_t t_ = 0;
};

/// Cosine decay from `base` at epoch 0 to `base * floor_frac` at the final
/// epoch.
inline double cosine_lr(double base, int epoch, int total_epochs, double floor_frac = 0.05) {
  if (total_epochs <= 1) return base;
  const double p = static_cast<double>(epoch) / static_cast<double>(total_epochs - 1);
  const double pi = 3.14159265358979323846;
  return base * (floor_frac + (1.0 - floor_frac) * 0.5 * (1.0 + std::cos(pi * p)));
}

}  // namespace coopred::nn
