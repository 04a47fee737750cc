#pragma once

#include <cstdint>
#include <string>

#include "coopred/graph.hpp"
#include "coopred/model/config.hpp"

namespace coopred {

/// Flat key=value run configuration covering model size, variant selection,
/// training schedule, and robustness injection. Defaults are desk scale; the
/// full-size settings remain selectable.
struct RunConfig {
  std::string variant = "full";
  int hidden_dim = 64;
  int heads = 8;
  int layers = 3;
  int temporal_layers = 2;
  int modes = 6;
  int ffn_mult = 4;
  int conv_channels = 64;
  int downsample = 2;      // 10 Hz -> 5 Hz
  int history_steps = 16;  // after downsampling
  int future_steps = 25;
  double pos_scale = 0.1;
  double lr = 2.5e-3;
  double lr_floor_frac = 0.05;
  double weight_decay = 1e-6;
  int epochs = 20;
  int batch_size = 24;
  std::uint64_t seed = 1;
  double noise_std = 0.0;  // m, Gaussian noise on communicated infra data
  double delay_s = 0.0;    // s, infra communication delay
  double miss_threshold = 2.0;
  int max_in_edges = 32;
  double map_radius_m = 250.0;
  int segment_points = 21;
  int max_scenes = 0;  // 0 = whole corpus

  ModelConfig model_config() const;
  GraphConfig graph_config() const;
  void validate() const;
};

/// Parses `key = value` lines; '#' starts a comment. Unknown keys raise
/// std::invalid_argument naming the key.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);

/// Emits every field in a stable order; parse(to_text(c)) == c.
std::string to_text(const RunConfig& config);

/// Returns $COOPRED_OUT_DIR when set and non-empty, else `fallback`.
std::string output_dir(const std::string& fallback);

}  // namespace coopred
