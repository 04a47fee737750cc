#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "coopred/generator.hpp"
#include "coopred/harness/ablate.hpp"
#include "coopred/harness/render.hpp"
#include "coopred/harness/robustness.hpp"
#include "coopred/harness/runconfig.hpp"
#include "coopred/harness/train.hpp"
#include "coopred/io/corpus.hpp"
#include "coopred/nn/adamw.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace coopred;
namespace fs = std::filesystem;

namespace {

RunConfig small_run_config() {
  RunConfig c;
  c.variant = "v5_plan";
  c.hidden_dim = 32;
  c.heads = 4;
  c.layers = 2;
  c.temporal_layers = 1;
  c.modes = 3;
  c.ffn_mult = 2;
  c.conv_channels = 16;
  c.epochs = 4;
  c.batch_size = 4;
  c.lr = 2.5e-3;
  c.seed = 7;
  return c;
}

std::vector<Scene> raw_scenes(int count, std::uint64_t seed0) {
  GeneratorConfig gc;
  gc.min_agents = 4;
  gc.max_agents = 6;
  std::vector<Scene> out;
  for (int i = 0; i < count; ++i)
    out.push_back(generate_scene(gc, seed0 + static_cast<std::uint64_t>(i)));
  return out;
}

bool states_equal(const std::vector<ObjectState>& a, const std::vector<ObjectState>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].x != b[i].x || a[i].y != b[i].y || a[i].heading != b[i].heading ||
        a[i].speed != b[i].speed || a[i].timestamp != b[i].timestamp)
      return false;
  return true;
}

bool tracks_equal(const std::vector<Track>& a, const std::vector<Track>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].object_id != b[i].object_id || !states_equal(a[i].states, b[i].states) ||
        a[i].mask != b[i].mask || a[i].detection_scores != b[i].detection_scores)
      return false;
  return true;
}

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

fs::path tmp_dir() {
  const fs::path dir = fs::temp_directory_path() / "coopred_harness_test";
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("run config parses, round-trips, and rejects bad input") {
  const RunConfig defaults;
  CHECK(defaults.variant == "full");
  CHECK(defaults.hidden_dim == 64);
  CHECK(defaults.epochs == 20);
  CHECK(defaults.miss_threshold == doctest::Approx(2.0));

  const RunConfig parsed = parse_run_config(
      "# training run\n"
      "variant = v3_stitch\n"
      "hidden_dim=48\n"
      "heads = 4   # per-layer\n"
      "lr = 1e-3\n"
      "seed = 42\n"
      "noise_std = 0.2\n");
  CHECK(parsed.variant == "v3_stitch");
  CHECK(parsed.hidden_dim == 48);
  CHECK(parsed.heads == 4);
  CHECK(parsed.lr == doctest::Approx(1e-3));
  CHECK(parsed.seed == 42);
  CHECK(parsed.noise_std == doctest::Approx(0.2));
  CHECK(parsed.layers == defaults.layers);

  const std::string text = to_text(parsed);
  const RunConfig reparsed = parse_run_config(text);
  CHECK(to_text(reparsed) == text);

  CHECK_THROWS_WITH_AS(parse_run_config("warmup = 3\n"), doctest::Contains("warmup"),
                       std::invalid_argument);
  CHECK_THROWS_AS(parse_run_config("hidden_dim = twelve\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_run_config("hidden_dim\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_run_config("variant = v9_unknown\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_run_config("hidden_dim = 30\nheads = 4\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_run_config("delay_s = -0.1\n"), std::invalid_argument);

  const GraphConfig full_graph = defaults.graph_config();
  CHECK(full_graph.use_av);
  CHECK(full_graph.use_infra_nodes);
  CHECK(full_graph.use_plan);
  CHECK(full_graph.use_infra_pred);
  RunConfig v1 = defaults;
  v1.variant = "v1_av_only";
  const GraphConfig v1_graph = v1.graph_config();
  CHECK(v1_graph.use_av);
  CHECK_FALSE(v1_graph.use_infra_nodes);
  CHECK_FALSE(v1_graph.use_plan);
  CHECK_FALSE(v1_graph.use_infra_pred);
  CHECK(v1_graph.max_in_edges == 32);

  ::setenv("COOPRED_OUT_DIR", "/tmp/override_here", 1);
  CHECK(output_dir("fallback") == "/tmp/override_here");
  ::unsetenv("COOPRED_OUT_DIR");
  CHECK(output_dir("fallback") == "fallback");
}

TEST_CASE("noise injection is seeded, scoped to infra data, and calibrated") {
  Scene scene = generate_scene(GeneratorConfig{}, 301);
  {
    InfraPrediction p;
    p.object_id = scene.target_ids.front();
    p.points.assign(10, Vec2{4.0, -2.0});
    scene.infra_predictions.push_back(p);
  }
  const Scene original = scene;

  Scene zero = scene;
  inject_noise(zero, 0.0, 99);
  CHECK(scenes_equal(zero, original));

  Scene a = scene, b = scene, c = scene;
  inject_noise(a, 0.2, 99);
  inject_noise(b, 0.2, 99);
  inject_noise(c, 0.2, 100);
  CHECK(scenes_equal(a, b));
  CHECK_FALSE(scenes_equal(a, c));

  CHECK(tracks_equal(a.av_tracks, original.av_tracks));
  CHECK(a.future_gt.size() == original.future_gt.size());
  for (std::size_t i = 0; i < a.future_gt.size(); ++i) {
    for (std::size_t j = 0; j < a.future_gt[i].points.size(); ++j) {
      CHECK(a.future_gt[i].points[j].x == original.future_gt[i].points[j].x);
      CHECK(a.future_gt[i].points[j].y == original.future_gt[i].points[j].y);
    }
  }

  int changed = 0, masked_changed = 0;
  for (std::size_t t = 0; t < a.infra_tracks.size(); ++t) {
    const Track& noisy = a.infra_tracks[t];
    const Track& clean = original.infra_tracks[t];
    for (std::size_t s = 0; s < noisy.states.size(); ++s) {
      const bool moved =
          noisy.states[s].x != clean.states[s].x || noisy.states[s].y != clean.states[s].y;
      if (clean.mask[s]) {
        changed += moved ? 1 : 0;
        CHECK(noisy.states[s].heading == clean.states[s].heading);
        CHECK(noisy.states[s].speed == clean.states[s].speed);
        CHECK(noisy.states[s].timestamp == clean.states[s].timestamp);
      } else {
        masked_changed += moved ? 1 : 0;
      }
    }
  }
  CHECK(changed > 0);
  CHECK(masked_changed == 0);
  bool pred_moved = false;
  for (const Vec2& p : a.infra_predictions.front().points)
    if (p.x != 4.0 || p.y != -2.0) pred_moved = true;
  CHECK(pred_moved);

  // Calibration: one long synthetic track gives tens of thousands of draws.
  Scene wide;
  wide.scene_id = "calibration";
  wide.av_id = "av";
  wide.history_horizon = 20000;
  wide.future_horizon = 2;
  Track big;
  big.object_id = "probe";
  big.view = View::kInfrastructure;
  big.states.assign(20000, ObjectState{});
  big.mask.assign(20000, 1);
  big.detection_scores.assign(20000, 1.0);
  wide.infra_tracks.push_back(big);
  Scene noisy = wide;
  inject_noise(noisy, 0.2, 4242);
  double sum = 0.0, sum_sq = 0.0;
  const double n = 2.0 * 20000.0;
  for (const auto& st : noisy.infra_tracks[0].states) {
    sum += st.x + st.y;
    sum_sq += st.x * st.x + st.y * st.y;
  }
  const double mean = sum / n;
  const double std = std::sqrt(sum_sq / n - mean * mean);
  CHECK(std::abs(mean) < 0.005);
  CHECK(std == doctest::Approx(0.2).epsilon(0.02));
}

TEST_CASE("delay injection truncates infra sequences by the rounded frame count") {
  CHECK(delay_frames(0.5, 10.0) == 5);
  CHECK(delay_frames(0.24, 10.0) == 2);
  CHECK(delay_frames(0.26, 10.0) == 3);
  CHECK(delay_frames(0.5, 5.0) == 3);  // 2.5 rounds away from zero

  Scene scene = generate_scene(GeneratorConfig{}, 302);
  const Scene original = scene;
  const int h = scene.history_horizon;

  Scene same = scene;
  inject_delay(same, 0.0);
  CHECK(scenes_equal(same, original));

  Scene delayed = scene;
  inject_delay(delayed, 0.5);
  CHECK(tracks_equal(delayed.av_tracks, original.av_tracks));
  for (std::size_t t = 0; t < delayed.infra_tracks.size(); ++t) {
    const Track& d = delayed.infra_tracks[t];
    const Track& o = original.infra_tracks[t];
    for (int s = 0; s < h; ++s) {
      const auto u = static_cast<std::size_t>(s);
      if (s >= h - 5) {
        CHECK(d.mask[u] == 0);
        CHECK(d.states[u].x == 0.0);
        CHECK(d.states[u].y == 0.0);
        CHECK(d.states[u].speed == 0.0);
        CHECK(d.detection_scores[u] == 0.0);
      } else {
        CHECK(d.mask[u] == o.mask[u]);
        CHECK(d.states[u].x == o.states[u].x);
        CHECK(d.states[u].timestamp == o.states[u].timestamp);
      }
    }
  }
  for (std::size_t i = 0; i < delayed.signals.size(); ++i)
    for (int s = h - 5; s < h; ++s)
      CHECK(delayed.signals[i].phase_sequence[static_cast<std::size_t>(s)] ==
            SignalPhase::kUnknown);

  Scene too_late = scene;
  CHECK_THROWS_AS(inject_delay(too_late, h / 10.0 + 1.0), std::invalid_argument);

  // Prestitch downstream never resurrects vacated frames: occlude the AV view
  // of one agent near the horizon, delay past it, and the gap must survive.
  Scene stitched_base = original;
  std::string probe_id;
  for (Track& t : stitched_base.av_tracks) {
    if (t.object_id == stitched_base.av_id) continue;
    const Track* infra = stitched_base.infra_track(t.object_id);
    if (infra == nullptr) continue;
    bool infra_sees_tail = true;
    for (int s = h - 5; s < h; ++s)
      if (!infra->mask[static_cast<std::size_t>(s)]) infra_sees_tail = false;
    if (!infra_sees_tail) continue;
    probe_id = t.object_id;
    for (int s = h - 5; s < h; ++s) {
      const auto u = static_cast<std::size_t>(s);
      t.mask[u] = 0;
      t.states[u] = ObjectState{};
      t.detection_scores[u] = 0.0;
    }
    break;
  }
  REQUIRE_FALSE(probe_id.empty());

  Scene filled = stitched_base;
  preprocess_scene(filled, 1, true);
  const Track* filled_track = filled.av_track(probe_id);
  REQUIRE(filled_track != nullptr);
  CHECK(filled_track->mask[static_cast<std::size_t>(h - 1)] == 1);

  Scene gapped = stitched_base;
  inject_delay(gapped, 0.5);
  preprocess_scene(gapped, 1, true);
  const Track* gapped_track = gapped.av_track(probe_id);
  REQUIRE(gapped_track != nullptr);
  for (int s = h - 5; s < h; ++s)
    CHECK(gapped_track->mask[static_cast<std::size_t>(s)] == 0);
}

TEST_CASE("two-stage preparation fails fast and installs infrastructure futures") {
  const std::vector<Scene> raw = raw_scenes(2, 510);
  RunConfig config = small_run_config();
  config.variant = "full";

  CHECK_THROWS_WITH_AS(prepare_scene(raw[0], config, nullptr),
                       doctest::Contains("v2_infra_only"), std::runtime_error);

  const RunConfig stage = infra_stage_config(config);
  CHECK(stage.variant == "v2_infra_only");
  CHECK(stage.hidden_dim == config.hidden_dim);
  CoMtp<float> infra(stage.model_config(), stage.seed);

  Scene preprocessed = raw[0];
  preprocess_scene(preprocessed, config.downsample, false);
  Scene once = preprocessed, twice = preprocessed;
  generate_infra_futures(infra, config, once);
  generate_infra_futures(infra, config, twice);
  REQUIRE_FALSE(once.infra_predictions.empty());
  CHECK(once.infra_predictions.size() == twice.infra_predictions.size());
  for (std::size_t i = 0; i < once.infra_predictions.size(); ++i) {
    CHECK(once.infra_predictions[i].object_id == twice.infra_predictions[i].object_id);
    CHECK(once.infra_predictions[i].object_id != preprocessed.av_id);
    REQUIRE(once.infra_predictions[i].points.size() ==
            static_cast<std::size_t>(config.future_steps));
    for (std::size_t j = 0; j < once.infra_predictions[i].points.size(); ++j) {
      CHECK(once.infra_predictions[i].points[j].x == twice.infra_predictions[i].points[j].x);
      CHECK(once.infra_predictions[i].points[j].y == twice.infra_predictions[i].points[j].y);
      CHECK(std::isfinite(once.infra_predictions[i].points[j].x));
    }
  }
  int expected = 0;
  for (const Track& t : preprocessed.infra_tracks)
    if (t.object_id != preprocessed.av_id && t.valid_count() > 0 &&
        preprocessed.future_of(t.object_id) != nullptr)
      ++expected;
  CHECK(static_cast<int>(once.infra_predictions.size()) == expected);

  const auto corpus = prepare_corpus(raw, config, &infra);
  REQUIRE(corpus.size() == raw.size());
  for (const PreparedScene& item : corpus) {
    CHECK_FALSE(item.scene.infra_predictions.empty());
    CHECK(item.graph.type_begin[8] - item.graph.type_begin[7] > 0);  // pred nodes exist
    CHECK_FALSE(item.graph.target_nodes.empty());
  }

  RunConfig v1 = config;
  v1.variant = "v1_av_only";
  const auto v1_corpus = prepare_corpus(raw, v1, nullptr);
  for (const PreparedScene& item : v1_corpus) {
    CHECK(item.scene.infra_predictions.empty());
    CHECK(item.graph.type_begin[8] - item.graph.type_begin[7] == 0);
    CHECK(item.graph.type_begin[7] - item.graph.type_begin[6] == 0);  // no plan node
    CHECK(item.graph.type_begin[6] - item.graph.type_begin[3] == 0);  // no infra nodes
  }
}

TEST_CASE("training is deterministic and the loss decreases") {
  const std::vector<Scene> raw = raw_scenes(6, 620);
  const RunConfig config = small_run_config();
  const auto corpus = prepare_corpus(raw, config, nullptr);

  CoMtp<float> model_a(config.model_config(), config.seed);
  const TrainSummary sum_a = train_model(model_a, corpus, config);
  CoMtp<float> model_b(config.model_config(), config.seed);
  const TrainSummary sum_b = train_model(model_b, corpus, config);

  REQUIRE(sum_a.epoch_loss.size() == static_cast<std::size_t>(config.epochs));
  CHECK(sum_a.steps == config.epochs * 2);  // 6 scenes / batch 4 -> 2 steps per epoch
  for (std::size_t e = 0; e < sum_a.epoch_loss.size(); ++e) {
    CHECK(std::isfinite(sum_a.epoch_loss[e]));
    CHECK(sum_a.epoch_loss[e] == sum_b.epoch_loss[e]);
  }
  for (const auto& name : model_a.store().names()) {
    const auto& va = model_a.store().entry(name).value;
    const auto& vb = model_b.store().entry(name).value;
    bool same = true;
    for (std::size_t i = 0; i < va.size(); ++i)
      if (va.data[i] != vb.data[i]) same = false;
    CHECK(same);
  }
  CHECK(sum_a.epoch_loss.back() < sum_a.epoch_loss.front());

  // A different seed trains a different model.
  RunConfig other = config;
  other.seed = config.seed + 1;
  CoMtp<float> model_c(other.model_config(), other.seed);
  const TrainSummary sum_c = train_model(model_c, corpus, other);
  CHECK(sum_c.epoch_loss.front() != sum_a.epoch_loss.front());

  // Cosine schedule endpoints.
  CHECK(nn::cosine_lr(1.0, 0, 10, 0.05) == doctest::Approx(1.0));
  CHECK(nn::cosine_lr(1.0, 9, 10, 0.05) == doctest::Approx(0.05));
  CHECK(nn::cosine_lr(1.0, 5, 10, 0.05) < 1.0);
}

TEST_CASE("evaluation aggregates per-target metrics faithfully") {
  const std::vector<Scene> raw = raw_scenes(2, 700);
  const RunConfig config = small_run_config();
  const auto corpus = prepare_corpus(raw, config, nullptr);
  CoMtp<float> model(config.model_config(), config.seed);

  const MetricsReport report = evaluate_model(model, corpus, config);
  std::vector<TargetMetrics> manual;
  for (const PreparedScene& item : corpus) {
    nn::Graph<float> g;
    const auto out = model.forward(g, item.inputs, false);
    const auto preds = extract_predictions(g, out, item.inputs, model.config());
    for (std::size_t t = 0; t < preds.size(); ++t) {
      std::vector<Vec2> gt;
      std::vector<uint8_t> mask;
      for (int s = 0; s < config.future_steps; ++s) {
        const int row = static_cast<int>(t) * config.future_steps + s;
        gt.push_back({static_cast<double>(item.inputs.target_future.at(row, 0)),
                      static_cast<double>(item.inputs.target_future.at(row, 1))});
        mask.push_back(item.inputs.target_future_valid[static_cast<std::size_t>(row)]);
      }
      manual.push_back(evaluate_target(preds[t].modes, gt, mask, config.miss_threshold));
    }
  }
  const MetricsReport expected = aggregate(manual, config.miss_threshold);
  CHECK(report.num_targets == expected.num_targets);
  CHECK(report.min_ade == expected.min_ade);
  CHECK(report.min_fde == expected.min_fde);
  CHECK(report.miss_rate == expected.miss_rate);
  CHECK(report.num_targets >= 2);
}

TEST_CASE("single-scene overfit drives the loss and error down") {
  const std::vector<Scene> raw = raw_scenes(1, 808);
  RunConfig config = small_run_config();
  config.epochs = 300;
  config.batch_size = 1;
  config.lr = 5e-3;
  const auto corpus = prepare_corpus(raw, config, nullptr);

  CoMtp<float> model(config.model_config(), config.seed);
  const MetricsReport before = evaluate_model(model, corpus, config);
  const TrainSummary summary = train_model(model, corpus, config);
  const MetricsReport after = evaluate_model(model, corpus, config);

  CHECK(summary.epoch_loss.back() < 0.05 * summary.epoch_loss.front());
  CHECK(after.min_ade < before.min_ade);
  CHECK(after.min_ade < 0.5);
}

TEST_CASE("ablation runner aggregates variants over seeds") {
  const std::vector<Scene> raw = raw_scenes(6, 910);
  RunConfig config = small_run_config();
  config.epochs = 2;
  std::ostringstream log;
  const AblationTable table = run_ablation(raw, config, {"v1_av_only", "v5_plan"}, {3, 4},
                                           /*eval_fraction=*/0.34, &log);

  REQUIRE(table.rows.size() == 2);
  CHECK(table.rows[0].variant == "v1_av_only");
  CHECK(table.rows[1].variant == "v5_plan");
  for (const VariantResult& row : table.rows) {
    REQUIRE(row.per_seed.size() == 2);
    const double lo = std::min(row.per_seed[0].min_ade, row.per_seed[1].min_ade);
    const double hi = std::max(row.per_seed[0].min_ade, row.per_seed[1].min_ade);
    CHECK(row.mean_min_ade >= lo);
    CHECK(row.mean_min_ade <= hi);
    CHECK(row.std_min_ade >= 0.0);
    CHECK(std::isfinite(row.mean_min_fde));
    CHECK(row.mean_miss_rate >= 0.0);
    CHECK(row.mean_miss_rate <= 1.0);
  }
  CHECK(log.str().find("v5_plan") != std::string::npos);

  const std::string csv = table.to_csv();
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  CHECK(csv.rfind("variant,", 0) == 0);
  const auto parsed = nlohmann::json::parse(table.to_json());
  REQUIRE(parsed.at("rows").size() == 2);
  CHECK(parsed.at("rows")[0].at("per_seed").size() == 2);
  const std::string text = table.to_text();
  CHECK(text.find("v1_av_only") != std::string::npos);
  CHECK(text.find("+/-") != std::string::npos);

  CHECK_THROWS_AS(run_ablation(raw, config, {}, {1}, 0.3, nullptr), std::invalid_argument);
  CHECK_THROWS_AS(run_ablation(raw, config, {"v1_av_only"}, {1}, 1.5, nullptr),
                  std::invalid_argument);
}

TEST_CASE("renderer writes deterministic non-empty images") {
  const std::vector<Scene> raw = raw_scenes(1, 1010);
  const RunConfig config = small_run_config();
  const auto corpus = prepare_corpus(raw, config, nullptr);
  CoMtp<float> model(config.model_config(), config.seed);
  nn::Graph<float> g;
  const auto out = model.forward(g, corpus[0].inputs, false);
  const auto preds = extract_predictions(g, out, corpus[0].inputs, model.config());

  const fs::path dir = tmp_dir();
  const fs::path img_a = dir / "scene_a.ppm";
  const fs::path img_b = dir / "scene_b.ppm";
  RenderOptions options;
  options.width = 640;
  options.height = 480;
  render_scene(corpus[0].scene, preds, img_a.string(), options);
  render_scene(corpus[0].scene, preds, img_b.string(), options);

  const std::string bytes = file_bytes(img_a);
  CHECK(bytes == file_bytes(img_b));
  CHECK(bytes.rfind("P6\n640 480\n255\n", 0) == 0);
  CHECK(bytes.size() == 15 + 640u * 480u * 3u);
  bool non_white = false;
  for (std::size_t i = 15; i < bytes.size(); ++i)
    if (static_cast<unsigned char>(bytes[i]) != 255) non_white = true;
  CHECK(non_white);

  CHECK_THROWS_AS(render_scene(Scene{}, {}, (dir / "empty.ppm").string(), options),
                  std::invalid_argument);
  fs::remove_all(dir);
}
