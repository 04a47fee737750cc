#include "coopred/harness/train.hpp"

#include <algorithm>
#include <memory>
#include <numeric>
#include <stdexcept>

#include "coopred/harness/robustness.hpp"
#include "coopred/nn/adamw.hpp"
#include "coopred/preprocess.hpp"
#include "coopred/rng.hpp"

namespace coopred {

namespace {

constexpr std::uint64_t kPredNoiseSalt = 0x7f4a7c159e3779b9ull;

GraphConfig infra_graph_config(const RunConfig& config) {
  GraphConfig g = variant_by_name("v2_infra_only").graph_config();
  g.max_in_edges = config.max_in_edges;
  g.map_radius_m = config.map_radius_m;
  g.segment_points = config.segment_points;
  return g;
}

}  // namespace

void generate_infra_futures(CoMtp<float>& infra_model, const RunConfig& config, Scene& scene) {
  Scene staged = scene;
  staged.target_ids.clear();
  for (const Track& track : staged.infra_tracks) {
    if (track.object_id == staged.av_id) continue;
    if (track.valid_count() == 0) continue;
    if (staged.future_of(track.object_id) == nullptr) continue;
    staged.target_ids.push_back(track.object_id);
  }
  scene.infra_predictions.clear();
  if (staged.target_ids.empty()) return;

  const HeteroGraph graph = build_graph(staged, infra_graph_config(config));
  const auto inputs = assemble_inputs<float>(staged, graph, infra_model.config());
  nn::Graph<float> g;
  const auto out = infra_model.forward(g, inputs, false);
  const auto preds = extract_predictions(g, out, inputs, infra_model.config());

  for (const TargetPrediction& p : preds) {
    int best = 0;
    for (int m = 1; m < static_cast<int>(p.probabilities.size()); ++m)
      if (p.probabilities[static_cast<std::size_t>(m)] >
          p.probabilities[static_cast<std::size_t>(best)])
        best = m;
    InfraPrediction installed;
    installed.object_id = p.object_id;
    installed.points.reserve(p.modes[static_cast<std::size_t>(best)].size());
    for (const Vec2& local : p.modes[static_cast<std::size_t>(best)])
      installed.points.push_back(local_to_global(local, p.frame));
    scene.infra_predictions.push_back(std::move(installed));
  }
}

Scene prepare_scene(const Scene& raw, const RunConfig& config, CoMtp<float>* infra_model) {
  const VariantSpec& variant = variant_by_name(config.variant);
  Scene delayed = raw;
  delayed.infra_predictions.clear();
  if (config.delay_s > 0.0) inject_delay(delayed, config.delay_s);

  Scene scene = delayed;
  if (config.noise_std > 0.0)
    inject_noise(scene, config.noise_std, scene_noise_seed(scene.scene_id, config.seed));
  preprocess_scene(scene, config.downsample, variant.use_stitch);

  if (variant.use_infra_pred) {
    if (infra_model == nullptr)
      throw std::runtime_error("variant '" + config.variant +
                               "' consumes infrastructure futures; train or load a "
                               "v2_infra_only checkpoint first");
    // The infrastructure side predicts from its own (delayed but noise-free)
    // observations; transmission noise then lands on the communicated points.
    Scene infra_side = delayed;
    preprocess_scene(infra_side, config.downsample, false);
    generate_infra_futures(*infra_model, config, infra_side);
    scene.infra_predictions = std::move(infra_side.infra_predictions);
    if (config.noise_std > 0.0) {
      Rng rng(scene_noise_seed(scene.scene_id, config.seed) ^ kPredNoiseSalt);
      for (InfraPrediction& pred : scene.infra_predictions)
        for (Vec2& p : pred.points) {
          p.x += rng.normal(0.0, config.noise_std);
          p.y += rng.normal(0.0, config.noise_std);
        }
    }
  }
  return scene;
}

std::vector<PreparedScene> prepare_corpus(const std::vector<Scene>& raw, const RunConfig& config,
                                          CoMtp<float>* infra_model) {
  config.validate();
  const ModelConfig model_cfg = config.model_config();
  const GraphConfig graph_cfg = config.graph_config();
  std::vector<PreparedScene> out;
  out.reserve(raw.size());
  for (const Scene& r : raw) {
    PreparedScene p;
    p.scene = prepare_scene(r, config, infra_model);
    p.graph = build_graph(p.scene, graph_cfg);
    if (p.graph.target_nodes.empty())
      throw std::runtime_error("scene " + p.scene.scene_id + ": no decodable targets under "
                               "variant " + config.variant);
    p.inputs = assemble_inputs<float>(p.scene, p.graph, model_cfg);
    out.push_back(std::move(p));
  }
  return out;
}

TrainSummary train_model(CoMtp<float>& model, const std::vector<PreparedScene>& corpus,
                         const RunConfig& config) {
  config.validate();
  if (corpus.empty()) throw std::invalid_argument("train: empty corpus");
  const int n = static_cast<int>(corpus.size());

  Rng shuffle(config.seed ^ 0x5deece66dull);
  nn::AdamWConfig opt_cfg;
  opt_cfg.weight_decay = config.weight_decay;
  nn::AdamW<float> opt(opt_cfg);

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  TrainSummary summary;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = nn::cosine_lr(config.lr, epoch, config.epochs, config.lr_floor_frac);
    for (int i = n - 1; i > 0; --i)
      std::swap(order[static_cast<std::size_t>(i)],
                order[static_cast<std::size_t>(shuffle.uniform_int(0, i))]);
    double loss_sum = 0.0;
    for (int begin = 0; begin < n; begin += config.batch_size) {
      const int end = std::min(n, begin + config.batch_size);
      model.store().zero_grads();
      for (int i = begin; i < end; ++i) {
        const PreparedScene& item = corpus[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
        nn::Graph<float> g;
        const auto out = model.forward(g, item.inputs, true);
        g.backward(out.loss);
        loss_sum += static_cast<double>(g.val(out.loss).at(0, 0));
      }
      model.store().scale_grads(1.0f / static_cast<float>(end - begin));
      opt.step(model.store(), lr);
      ++summary.steps;
    }
    summary.epoch_loss.push_back(loss_sum / n);
  }
  return summary;
}

MetricsReport evaluate_model(CoMtp<float>& model, const std::vector<PreparedScene>& corpus,
                             const RunConfig& config) {
  if (corpus.empty()) throw std::invalid_argument("evaluate: empty corpus");
  const ModelConfig model_cfg = model.config();
  std::vector<TargetMetrics> per_target;
  for (const PreparedScene& item : corpus) {
    nn::Graph<float> g;
    const auto out = model.forward(g, item.inputs, false);
    const auto preds = extract_predictions(g, out, item.inputs, model_cfg);
    for (std::size_t t = 0; t < preds.size(); ++t) {
      const int steps = model_cfg.future_steps;
      std::vector<Vec2> gt(static_cast<std::size_t>(steps));
      std::vector<uint8_t> mask(static_cast<std::size_t>(steps));
      for (int s = 0; s < steps; ++s) {
        const int row = static_cast<int>(t) * steps + s;
        gt[static_cast<std::size_t>(s)] = {
            static_cast<double>(item.inputs.target_future.at(row, 0)),
            static_cast<double>(item.inputs.target_future.at(row, 1))};
        mask[static_cast<std::size_t>(s)] =
            item.inputs.target_future_valid[static_cast<std::size_t>(row)];
      }
      per_target.push_back(
          evaluate_target(preds[t].modes, gt, mask, config.miss_threshold));
    }
  }
  return aggregate(per_target, config.miss_threshold);
}

RunConfig infra_stage_config(const RunConfig& config) {
  RunConfig stage = config;
  stage.variant = "v2_infra_only";
  stage.noise_std = 0.0;
  stage.delay_s = 0.0;
  return stage;
}

TrainedPair train_variant(const std::vector<Scene>& raw, const RunConfig& config) {
  config.validate();
  const VariantSpec& variant = variant_by_name(config.variant);
  TrainedPair result;
  if (variant.use_infra_pred) {
    const RunConfig stage = infra_stage_config(config);
    result.infra = std::make_unique<CoMtp<float>>(stage.model_config(), stage.seed);
    const auto stage_corpus = prepare_corpus(raw, stage, nullptr);
    result.infra_summary = train_model(*result.infra, stage_corpus, stage);
  }
  result.model = std::make_unique<CoMtp<float>>(config.model_config(), config.seed);
  const auto corpus = prepare_corpus(raw, config, result.infra.get());
  result.summary = train_model(*result.model, corpus, config);
  return result;
}

}  // namespace coopred
