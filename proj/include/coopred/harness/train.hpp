#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "coopred/graph.hpp"
#include "coopred/harness/runconfig.hpp"
#include "coopred/metrics.hpp"
#include "coopred/model/inputs.hpp"
#include "coopred/model/network.hpp"
#include "coopred/scene.hpp"

namespace coopred {

/// A scene after variant-specific preparation, with its graph and the dense
/// network inputs, cached so training epochs skip re-preprocessing.
struct PreparedScene {
  Scene scene;
  HeteroGraph graph;
  SceneInputs<float> inputs;
};

/// Runs the infrastructure-side model on a preprocessed scene and installs
/// the highest-probability predicted trajectory, expressed in the global
/// frame, for every infrastructure-observed object that has a ground-truth
/// future. The AV itself is excluded. Existing predictions are replaced.
void generate_infra_futures(CoMtp<float>& infra_model, const RunConfig& config, Scene& scene);

/// Raw-corpus scene -> model-ready scene for config.variant. Order: delay
/// injection at native frequency, transmission noise on infra histories,
/// downsampling plus prestitch when the variant uses it, then infrastructure
/// future prediction from the delayed-but-clean infra view followed by
/// transmission noise on the predicted points. Variants that consume
/// infrastructure futures require `infra_model`; passing nullptr throws.
Scene prepare_scene(const Scene& raw, const RunConfig& config, CoMtp<float>* infra_model);

/// Applies prepare_scene to every raw scene and builds graphs and inputs.
std::vector<PreparedScene> prepare_corpus(const std::vector<Scene>& raw,
                                          const RunConfig& config, CoMtp<float>* infra_model);

struct TrainSummary {
  std::vector<double> epoch_loss;  // mean scene loss per epoch
  int steps = 0;                   // optimizer steps taken
};

/// Deterministic single-thread training: per-epoch shuffled order, gradients
/// averaged over each mini-batch, AdamW updates under cosine lr decay.
TrainSummary train_model(CoMtp<float>& model, const std::vector<PreparedScene>& corpus,
                         const RunConfig& config);

/// Decodes every prepared scene and aggregates displacement metrics over all
/// targets. Metrics are computed in target-local frames, which leaves them
/// identical to global-frame values up to rigid motion.
MetricsReport evaluate_model(CoMtp<float>& model, const std::vector<PreparedScene>& corpus,
                             const RunConfig& config);

/// Convenience wrapper: builds a fresh model from the config (plus an infra
/// model trained first when the variant needs one), trains, and returns the
/// trained models. infra is null when unused.
struct TrainedPair {
  std::unique_ptr<CoMtp<float>> model;
  std::unique_ptr<CoMtp<float>> infra;
  TrainSummary summary;
  TrainSummary infra_summary;
};
TrainedPair train_variant(const std::vector<Scene>& raw, const RunConfig& config);

/// The stage-1 configuration derived from a run config: same sizes and
/// schedule, variant forced to the infrastructure-only row, clean inputs.
RunConfig infra_stage_config(const RunConfig& config);

}  // namespace coopred
