#pragma once

#include <string>
#include <vector>

#include "coopred/model/network.hpp"
#include "coopred/scene.hpp"

namespace coopred {

struct RenderOptions {
  int width = 900;
  int height = 900;
  double margin_m = 10.0;  // world-space padding around the scene bounds
};

/// Draws a scene top-down into a binary PPM (P6) image. Color scheme: map
/// geometry gray, observed histories blue, ground-truth futures brown,
/// predicted modes green, target position markers orange, and the AV as a
/// red box. Output bytes are deterministic for identical inputs.
void render_scene(const Scene& scene, const std::vector<TargetPrediction>& predictions,
                  const std::string& path, const RenderOptions& options = {});

}  // namespace coopred
