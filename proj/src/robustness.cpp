#include "coopred/harness/robustness.hpp"

#include <cmath>
#include <stdexcept>

#include "coopred/rng.hpp"

namespace coopred {

void inject_noise(Scene& scene, double std_m, std::uint64_t seed) {
  if (std_m < 0.0) throw std::invalid_argument("inject_noise: negative std");
  if (std_m == 0.0) return;
  Rng rng(seed);
  for (Track& track : scene.infra_tracks) {
    for (std::size_t t = 0; t < track.states.size(); ++t) {
      if (!track.mask[t]) continue;
      track.states[t].x += rng.normal(0.0, std_m);
      track.states[t].y += rng.normal(0.0, std_m);
    }
  }
  for (InfraPrediction& pred : scene.infra_predictions) {
    for (Vec2& p : pred.points) {
      p.x += rng.normal(0.0, std_m);
      p.y += rng.normal(0.0, std_m);
    }
  }
}

int delay_frames(double delay_s, double frequency_hz) {
  return static_cast<int>(std::lround(delay_s * frequency_hz));
}

void inject_delay(Scene& scene, double delay_s) {
  if (delay_s < 0.0) throw std::invalid_argument("inject_delay: negative delay");
  const int k = delay_frames(delay_s, scene.frequency_hz);
  if (k == 0) return;
  if (k >= scene.history_horizon)
    throw std::invalid_argument("inject_delay: delay of " + std::to_string(k) +
                                " frames reaches the history horizon of " +
                                std::to_string(scene.history_horizon));
  const int h = scene.history_horizon;
  for (Track& track : scene.infra_tracks) {
    for (int t = h - k; t < h; ++t) {
      const auto u = static_cast<std::size_t>(t);
      track.mask[u] = 0;
      track.states[u] = ObjectState{};
      track.detection_scores[u] = 0.0;
    }
  }
  for (SignalRecord& signal : scene.signals) {
    for (int t = h - k; t < h; ++t)
      signal.phase_sequence[static_cast<std::size_t>(t)] = SignalPhase::kUnknown;
  }
}

std::uint64_t scene_noise_seed(const std::string& scene_id, std::uint64_t base_seed) {
  std::uint64_t hash = 14695981039346656037ull;
  for (unsigned char c : scene_id) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  return hash ^ (base_seed * 0x9e3779b97f4a7c15ull + 0x2545f4914f6cdd1dull);
}

}  // namespace coopred
