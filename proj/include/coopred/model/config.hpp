#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "coopred/graph.hpp"

namespace coopred {

/// Network and problem dimensions. Defaults are the full-scale settings;
/// training presets shrink hidden_dim/layers for CPU-sized runs.
struct ModelConfig {
  int hidden_dim = 256;
  int heads = 8;
  int layers = 6;           // CTCA fusion layers
  int temporal_layers = 2;  // self-attention layers per temporal stack
  int modes = 6;            // predicted futures per target
  int history_steps = 16;   // downsampled history length
  int future_steps = 25;    // downsampled future length
  int ffn_mult = 4;
  int conv_channels = 64;   // decoder refinement conv width
  double pos_scale = 0.1;   // meters-to-feature scaling on positions

  void validate() const {
    if (hidden_dim < 1 || heads < 1 || hidden_dim % heads != 0)
      throw std::invalid_argument("model: hidden_dim must be a positive multiple of heads");
    if (layers < 1 || temporal_layers < 1 || modes < 1)
      throw std::invalid_argument("model: layers and modes must be positive");
    if (history_steps < 1 || future_steps < 2)
      throw std::invalid_argument("model: bad horizon lengths");
    if (ffn_mult < 1 || conv_channels < 1 || pos_scale <= 0.0)
      throw std::invalid_argument("model: bad width settings");
  }
};

/// One row of the fusion ablation: which views feed the graph, whether the
/// AV view is prestitched from infrastructure, and which futures join.
struct VariantSpec {
  std::string name;
  bool use_av = true;
  bool use_infra_nodes = true;
  bool use_stitch = true;
  bool use_plan = true;
  bool use_infra_pred = true;

  GraphConfig graph_config() const {
    GraphConfig g;
    g.use_av = use_av;
    g.use_infra_nodes = use_infra_nodes;
    g.use_plan = use_plan;
    g.use_infra_pred = use_infra_pred;
    return g;
  }
};

inline const std::vector<VariantSpec>& all_variants() {
  static const std::vector<VariantSpec> table = {
      {"v1_av_only", true, false, false, false, false},
      {"v2_infra_only", false, true, false, false, false},
      {"v3_stitch", true, false, true, false, false},
      {"v4_stitch_full_infra", true, true, true, false, false},
      {"v5_plan", true, true, true, true, false},
      {"v6_infra_pred", true, true, true, false, true},
      {"v7_stitch_futures", true, false, true, true, true},
      {"full", true, true, true, true, true},
  };
  return table;
}

inline const VariantSpec& variant_by_name(const std::string& name) {
  for (const VariantSpec& v : all_variants())
    if (v.name == name) return v;
  throw std::invalid_argument("unknown variant: " + name);
}

}  // namespace coopred
