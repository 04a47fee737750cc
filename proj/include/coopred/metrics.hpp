#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "coopred/geom.hpp"

namespace coopred {

/// Displacement errors of one decoded target.
struct TargetMetrics {
  double min_ade = 0.0;
  double min_fde = 0.0;
  bool miss = false;
};

/// Corpus-level aggregate: means over targets, miss fraction.
struct MetricsReport {
  double min_ade = 0.0;
  double min_fde = 0.0;
  double miss_rate = 0.0;
  int num_targets = 0;
  double miss_threshold = 2.0;
  std::vector<TargetMetrics> per_target;
};

/// Minimum over modes of the mean Euclidean displacement across valid future
/// frames. modes is K trajectories of equal length T; gt and mask have length
/// T. Throws std::invalid_argument on empty modes, length mismatch, or a
/// fully masked future.
double min_ade(const std::vector<std::vector<Vec2>>& modes, const std::vector<Vec2>& gt,
               const std::vector<uint8_t>& mask);

/// Minimum over modes of the displacement at the last valid frame.
double min_fde(const std::vector<std::vector<Vec2>>& modes, const std::vector<Vec2>& gt,
               const std::vector<uint8_t>& mask);

TargetMetrics evaluate_target(const std::vector<std::vector<Vec2>>& modes,
                              const std::vector<Vec2>& gt, const std::vector<uint8_t>& mask,
                              double miss_threshold);

/// Means over all targets; throws std::invalid_argument when empty.
MetricsReport aggregate(const std::vector<TargetMetrics>& per_target, double miss_threshold);

std::string to_json(const MetricsReport& report);
std::string to_csv(const MetricsReport& report);

}  // namespace coopred
