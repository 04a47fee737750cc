#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "coopred/generator.hpp"
#include "coopred/io/adapter.hpp"
#include "coopred/io/checkpoint.hpp"
#include "coopred/io/corpus.hpp"
#include "coopred/model/inputs.hpp"
#include "coopred/model/network.hpp"
#include "coopred/nn/adamw.hpp"
#include "coopred/preprocess.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace coopred;
namespace fs = std::filesystem;

namespace {

fs::path tmp_dir() {
  const fs::path dir = fs::temp_directory_path() / "coopred_io_test";
  fs::create_directories(dir);
  return dir;
}

void add_cv_predictions(Scene& s) {
  for (const auto& id : s.target_ids) {
    const Track* tr = s.infra_track(id);
    if (tr == nullptr) continue;
    const int lv = tr->last_valid_index();
    if (lv < 0) continue;
    const ObjectState& st = tr->states[static_cast<std::size_t>(lv)];
    InfraPrediction p;
    p.object_id = id;
    for (int i = 1; i <= s.future_horizon; ++i)
      p.points.push_back({st.x + st.speed * std::cos(st.heading) * i / s.frequency_hz,
                          st.y + st.speed * std::sin(st.heading) * i / s.frequency_hz});
    s.infra_predictions.push_back(std::move(p));
  }
}

std::vector<Scene> sample_scenes(int count) {
  std::vector<Scene> scenes;
  for (int i = 0; i < count; ++i) {
    GeneratorConfig gc;
    gc.map_template = i % 2 == 0 ? MapTemplate::kIntersection : MapTemplate::kStraight;
    Scene s = generate_scene(gc, 1000 + static_cast<uint64_t>(i));
    if (i % 3 == 0) {
      preprocess_scene(s, 2);
      add_cv_predictions(s);
    }
    scenes.push_back(std::move(s));
  }
  return scenes;
}

ModelConfig small_config() {
  ModelConfig cfg;
  cfg.hidden_dim = 32;
  cfg.heads = 4;
  cfg.layers = 2;
  cfg.temporal_layers = 1;
  cfg.modes = 3;
  cfg.history_steps = 16;
  cfg.future_steps = 25;
  cfg.ffn_mult = 2;
  cfg.conv_channels = 16;
  return cfg;
}

Scene model_scene(uint64_t seed) {
  GeneratorConfig gc;
  gc.min_agents = 4;
  gc.max_agents = 6;
  Scene s = generate_scene(gc, seed);
  preprocess_scene(s, 2);
  add_cv_predictions(s);
  return s;
}

}  // namespace

TEST_CASE("corpus writes are deterministic and round-trip exactly") {
  const auto dir = tmp_dir();
  const std::string path = (dir / "corpus.jsonl").string();
  const std::string path2 = (dir / "corpus2.jsonl").string();
  const std::vector<Scene> scenes = sample_scenes(20);

  write_corpus(scenes, path);
  const std::vector<Scene> loaded = read_corpus(path);
  REQUIRE(loaded.size() == scenes.size());
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    CAPTURE(i);
    CHECK(scenes_equal(scenes[i], loaded[i]));
  }

  write_corpus(loaded, path2);
  CHECK(fnv1a_file(path) == fnv1a_file(path2));
}

TEST_CASE("corpus edge cases") {
  const auto dir = tmp_dir();

  SUBCASE("empty file reads as an empty corpus") {
    const std::string path = (dir / "empty.jsonl").string();
    std::ofstream(path).close();
    CHECK(read_corpus(path).empty());
  }

  SUBCASE("a malformed line is reported with its line number") {
    const std::string path = (dir / "broken.jsonl").string();
    const std::vector<Scene> scenes = sample_scenes(2);
    write_corpus(scenes, path);
    {
      std::ofstream app(path, std::ios::app);
      app << "{\"scene_id\": trunca\n";
    }
    try {
      read_corpus(path);
      FAIL("expected a parse error");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
  }

  SUBCASE("missing file raises") { CHECK_THROWS(read_corpus((dir / "nope.jsonl").string())); }
}

TEST_CASE("content hash detects any single-byte mutation") {
  const auto dir = tmp_dir();
  const std::string path = (dir / "hashed.jsonl").string();
  write_corpus(sample_scenes(3), path);
  const std::uint64_t clean = fnv1a_file(path);

  std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
  f.seekg(0, std::ios::end);
  const auto size = static_cast<long>(f.tellg());
  for (long offset : {0L, size / 2, size - 2}) {
    f.seekg(offset);
    char c = 0;
    f.get(c);
    f.seekp(offset);
    f.put(c == 'x' ? 'y' : 'x');
    f.flush();
    CHECK(fnv1a_file(path) != clean);
    f.seekp(offset);
    f.put(c);
    f.flush();
    CHECK(fnv1a_file(path) == clean);
  }
}

TEST_CASE("manifest describes the corpus") {
  const auto dir = tmp_dir();
  const std::string path = (dir / "manifest_corpus.jsonl").string();
  write_corpus(sample_scenes(5), path);

  const CorpusManifest m = make_manifest(path, "train");
  CHECK(m.scene_count == 5);
  CHECK(m.content_hash == fnv1a_file(path));

  const std::string mpath = (dir / "manifest.json").string();
  write_manifest(m, mpath);
  const CorpusManifest back = read_manifest(mpath);
  CHECK(back.corpus_path == m.corpus_path);
  CHECK(back.split == "train");
  CHECK(back.scene_count == 5);
  CHECK(back.content_hash == m.content_hash);
  CHECK(back.schema_version == m.schema_version);
}

TEST_CASE("external records adapt into scenes") {
  using nlohmann::json;

  Scene direct;
  direct.scene_id = "seq_7";
  direct.av_id = "ego";
  direct.target_ids = {"a1"};
  direct.history_horizon = 3;
  direct.future_horizon = 2;
  direct.frequency_hz = 10.0;
  {
    Track t;
    t.object_id = "ego";
    t.object_type = ObjectType::kVehicle;
    t.bbox = {4.5, 2.0, 1.6};
    t.view = View::kAv;
    for (int i = 0; i < 3; ++i) {
      ObjectState s{1.0 * i, 2.0, 0.25, 5.0, 0.1 * i};
      t.states.push_back(s);
      t.mask.push_back(1);
      t.detection_scores.push_back(0.9);
    }
    direct.av_tracks.push_back(t);
    t.object_id = "a1";
    t.view = View::kInfrastructure;
    direct.av_tracks.push_back([&] {
      Track a = t;
      a.view = View::kAv;
      a.mask[1] = 0;
      a.states[1] = ObjectState{};
      a.detection_scores[1] = 0.0;
      return a;
    }());
    direct.infra_tracks.push_back(t);
  }
  direct.map.push_back({"lane_0", MapKind::kLaneLine, {{0, 0}, {10, 0}}});
  direct.signals.push_back({"sig_0",
                            {3.0, 4.0},
                            {SignalPhase::kGreen, SignalPhase::kGreen, SignalPhase::kRed}});
  direct.future_gt.push_back({"a1", {{3.0, 2.0}, {4.0, 2.0}}, {1, 1}});

  json rec;
  rec["sequence_id"] = "seq_7";
  rec["ego_id"] = "ego";
  rec["targets"] = {"a1"};
  rec["frequency"] = 10.0;
  auto agent_json = [](const Track& t) {
    json a;
    a["id"] = t.object_id;
    a["agent_type"] = t.object_type == ObjectType::kVehicle ? "CAR" : "CYCLIST";
    a["size"] = {t.bbox[0], t.bbox[1], t.bbox[2]};
    a["frames"] = json::array();
    for (std::size_t i = 0; i < t.states.size(); ++i) {
      json f;
      f["visible"] = t.mask[i] != 0;
      if (t.mask[i]) {
        f["x"] = t.states[i].x;
        f["y"] = t.states[i].y;
        f["theta"] = t.states[i].heading;
        f["v"] = t.states[i].speed;
        f["ts"] = t.states[i].timestamp;
        f["score"] = t.detection_scores[i];
      }
      a["frames"].push_back(f);
    }
    return a;
  };
  rec["vehicle_view"]["agents"] = {agent_json(direct.av_tracks[0]), agent_json(direct.av_tracks[1])};
  rec["infrastructure_view"]["agents"] = {agent_json(direct.infra_tracks[0])};
  rec["map_features"] = {{{"id", "lane_0"}, {"category", "LANE"}, {"polyline", {{0.0, 0.0}, {10.0, 0.0}}}}};
  rec["traffic_lights"] = {
      {{"id", "sig_0"}, {"x", 3.0}, {"y", 4.0}, {"states", {"GREEN", "GREEN", "RED"}}}};
  rec["futures"] = {{{"id", "a1"}, {"waypoints", {{3.0, 2.0}, {4.0, 2.0}}}, {"observed", {true, true}}}};

  std::vector<std::string> warnings;
  const Scene adapted = adapt_external(rec.dump(), &warnings);
  CHECK(warnings.empty());
  CHECK(scenes_equal(direct, adapted));

  SUBCASE("missing infrastructure view leaves infra_tracks empty") {
    json no_infra = rec;
    no_infra.erase("infrastructure_view");
    const Scene s = adapt_external(no_infra.dump());
    CHECK(s.infra_tracks.empty());
    CHECK(s.av_tracks.size() == 2);
  }

  SUBCASE("unknown agent types fall back with a warning") {
    json odd = rec;
    odd["vehicle_view"]["agents"][1]["agent_type"] = "tricycle";
    std::vector<std::string> notes;
    const Scene s = adapt_external(odd.dump(), &notes);
    CHECK(s.av_tracks[1].object_type == ObjectType::kBicycle);
    REQUIRE(notes.size() == 1);
    CHECK(notes[0].find("tricycle") != std::string::npos);
    CHECK(notes[0].find("bicycle") != std::string::npos);
  }

  SUBCASE("missing mandatory fields raise") {
    json bad = rec;
    bad.erase("ego_id");
    CHECK_THROWS_AS(adapt_external(bad.dump()), std::runtime_error);
    CHECK_THROWS_AS(adapt_external("not json"), std::runtime_error);
  }
}

TEST_CASE("checkpoints restore forward passes bitwise") {
  const auto dir = tmp_dir();
  const std::string path = (dir / "model.ckpt").string();
  const ModelConfig cfg = small_config();
  const Scene scene = model_scene(42);
  const VariantSpec var = variant_by_name("full");
  const HeteroGraph graph = build_graph(scene, var.graph_config());
  const SceneInputs<float> in = assemble_inputs<float>(scene, graph, cfg);

  CoMtp<float> a(cfg, 7);
  nn::AdamW<float> opt;
  for (int step = 0; step < 3; ++step) {
    a.store().zero_grads();
    nn::Graph<float> g;
    auto out = a.forward(g, in, true);
    g.backward(out.loss);
    opt.step(a.store(), 1e-3);
  }
  nn::Graph<float> ga;
  const auto oa = a.forward(ga, in, true);

  CheckpointMeta meta;
  meta.model = cfg;
  meta.variant = "full";
  meta.epoch = 3;
  meta.adam_step = opt.step_count();
  meta.metric_history = {1.5, 1.2, 1.0};
  save_checkpoint(path, a.store(), meta);

  CoMtp<float> b(cfg, 999);  // different init; load must overwrite it
  const CheckpointMeta back = load_checkpoint(path, b.store());
  CHECK(back.variant == "full");
  CHECK(back.epoch == 3);
  CHECK(back.adam_step == 3);
  CHECK(back.metric_history == meta.metric_history);
  CHECK(back.model.hidden_dim == cfg.hidden_dim);

  nn::Graph<float> gb;
  const auto ob = b.forward(gb, in, true);
  const auto& ta = ga.val(oa.trajectories);
  const auto& tb = gb.val(ob.trajectories);
  REQUIRE(ta.same_shape(tb));
  for (std::size_t i = 0; i < ta.data.size(); ++i) REQUIRE(ta.data[i] == tb.data[i]);
  CHECK(ga.val(oa.loss).at(0, 0) == gb.val(ob.loss).at(0, 0));

  SUBCASE("metadata peek does not need a model") {
    const CheckpointMeta peeked = peek_checkpoint(path);
    CHECK(peeked.model.hidden_dim == cfg.hidden_dim);
    CHECK(peeked.epoch == 3);
  }

  SUBCASE("a model of different width is rejected with a clear error") {
    ModelConfig wide = cfg;
    wide.hidden_dim = 64;
    wide.heads = 8;
    CoMtp<float> c(wide, 7);
    try {
      load_checkpoint(path, c.store());
      FAIL("expected shape mismatch");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()).find("shape mismatch") != std::string::npos);
    }
  }

  SUBCASE("corrupt magic is rejected") {
    const std::string bad = (dir / "bad.ckpt").string();
    std::ofstream(bad, std::ios::binary) << "definitely not a checkpoint";
    CoMtp<float> c(cfg, 7);
    CHECK_THROWS_AS(load_checkpoint(bad, c.store()), std::runtime_error);
  }
}

TEST_CASE("optimizer state resumes an interrupted run exactly") {
  const auto dir = tmp_dir();
  const std::string path = (dir / "resume.ckpt").string();
  const ModelConfig cfg = small_config();
  const Scene scene = model_scene(43);
  const HeteroGraph graph = build_graph(scene, variant_by_name("full").graph_config());
  const SceneInputs<float> in = assemble_inputs<float>(scene, graph, cfg);

  auto one_step = [&](CoMtp<float>& m, nn::AdamW<float>& opt) {
    m.store().zero_grads();
    nn::Graph<float> g;
    auto out = m.forward(g, in, true);
    g.backward(out.loss);
    opt.step(m.store(), 2e-3);
  };

  CoMtp<float> cont(cfg, 11);
  nn::AdamW<float> opt_cont;
  for (int i = 0; i < 4; ++i) one_step(cont, opt_cont);

  CoMtp<float> first(cfg, 11);
  nn::AdamW<float> opt_first;
  for (int i = 0; i < 2; ++i) one_step(first, opt_first);
  CheckpointMeta meta;
  meta.model = cfg;
  meta.variant = "full";
  meta.epoch = 2;
  meta.adam_step = opt_first.step_count();
  save_checkpoint(path, first.store(), meta);

  CoMtp<float> second(cfg, 555);
  const CheckpointMeta back = load_checkpoint(path, second.store());
  nn::AdamW<float> opt_second;
  opt_second.set_step_count(back.adam_step);
  for (int i = 0; i < 2; ++i) one_step(second, opt_second);

  for (const auto& name : cont.store().names()) {
    const auto& expect = cont.store().entry(name).value;
    const auto& got = second.store().entry(name).value;
    bool same = true;
    for (std::size_t i = 0; i < expect.data.size(); ++i)
      if (expect.data[i] != got.data[i]) same = false;
    CAPTURE(name);
    REQUIRE(same);
  }
}
