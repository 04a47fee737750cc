#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "coopred/rng.hpp"
#include "coopred/scene.hpp"

namespace coopred {

enum class MapTemplate : uint8_t { kStraight = 0, kIntersection = 1 };

/// Parameters of the synthetic two-view scenario generator.
struct GeneratorConfig {
  int min_agents = 4;   // including the AV
  int max_agents = 8;
  MapTemplate map_template = MapTemplate::kIntersection;
  double av_occlusion_rate = 0.3;      // per-frame drop probability, AV view
  double infra_occlusion_rate = 0.05;  // per-frame drop probability, infra view
  double av_noise_std = 0.3;           // m, position noise per axis, AV view
  double infra_noise_std = 0.05;       // m, position noise per axis, infra view
  int history_steps = 31;              // frames t_0..t_h inclusive
  int future_steps = 50;               // frames t_h+1..t_h+t_f
  double frequency_hz = 10.0;
  double max_accel = 3.0;      // m/s^2, hard bound on ground-truth motion
  double max_speed = 15.0;     // m/s
  double lane_width = 3.5;     // m
  double pedestrian_fraction = 0.2;
  double bicycle_fraction = 0.1;
  double yield_to_av_fraction = 0.5;  // fraction of conflicting agents that yield to the AV
};

/// Generates a synthetic V2X scene. Deterministic given (config, seed).
/// Throws std::invalid_argument on zero agents or horizons < 2 steps.
Scene generate_scene(const GeneratorConfig& config, uint64_t seed);

/// Checks every scene/type invariant; returns one human-readable string per
/// violation (empty means valid). Never throws.
std::vector<std::string> validate_scene(const Scene& scene);

}  // namespace coopred
