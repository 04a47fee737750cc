#pragma once

#include <cstdint>
#include <string>

#include "coopred/scene.hpp"

namespace coopred {

/// Adds i.i.d. Gaussian offsets (std in meters) to the positions of all
/// communicated infrastructure data: infra-track states on valid frames and
/// infra future predictions. Vehicle-side data is untouched. std == 0 is an
/// exact no-op.
void inject_noise(Scene& scene, double std_m, std::uint64_t seed);

/// Models an infrastructure communication delay of `delay_s` seconds at the
/// scene's native frequency. The newest round(delay_s * frequency) frames of
/// every infra track are vacated (mask 0, zero state, zero score), so the
/// freshest available infra observation is `delay_s` older than the current
/// time; older frames keep their original timestamps. Signal phase sequences
/// lose their newest entries the same way (set to unknown). Throws when the
/// rounded shift reaches the history horizon.
void inject_delay(Scene& scene, double delay_s);

/// Number of frames vacated by inject_delay for this delay and frequency.
int delay_frames(double delay_s, double frequency_hz);

/// Deterministic per-scene noise seed: FNV-1a of the scene id mixed with the
/// run seed, so corruption is reproducible and independent across scenes.
std::uint64_t scene_noise_seed(const std::string& scene_id, std::uint64_t base_seed);

}  // namespace coopred
