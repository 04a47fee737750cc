#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "coopred/generator.hpp"
#include "coopred/graph.hpp"
#include "coopred/model/config.hpp"
#include "coopred/model/inputs.hpp"
#include "coopred/model/network.hpp"
#include "coopred/preprocess.hpp"
#include "coopred/rng.hpp"
#include "doctest.h"

using namespace coopred;

namespace {

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

// Constant-velocity stand-in for the infrastructure-side model output.
void add_cv_predictions(Scene& s) {
  for (const auto& id : s.target_ids) {
    const Track* tr = s.infra_track(id);
    if (tr == nullptr) continue;
    const int lv = tr->last_valid_index();
    if (lv < 0) continue;
    const ObjectState& st = tr->states[static_cast<std::size_t>(lv)];
    InfraPrediction p;
    p.object_id = id;
    const double vx = st.speed * std::cos(st.heading);
    const double vy = st.speed * std::sin(st.heading);
    for (int i = 1; i <= s.future_horizon; ++i)
      p.points.push_back({st.x + vx * i / s.frequency_hz, st.y + vy * i / s.frequency_hz});
    s.infra_predictions.push_back(std::move(p));
  }
}

Scene make_model_scene(uint64_t seed) {
  GeneratorConfig gc;
  gc.min_agents = 4;
  gc.max_agents = 6;
  Scene s = generate_scene(gc, seed);
  preprocess_scene(s, 2);
  add_cv_predictions(s);
  return s;
}

template <typename T>
bool all_finite(const nn::Tensor<T>& t) {
  for (T v : t.data)
    if (!std::isfinite(static_cast<double>(v))) return false;
  return true;
}

template <typename T>
bool bitwise_equal(const nn::Tensor<T>& a, const nn::Tensor<T>& b) {
  if (!a.same_shape(b)) return false;
  for (std::size_t i = 0; i < a.data.size(); ++i)
    if (!(a.data[i] == b.data[i])) return false;
  return true;
}

double huber_ref(double d) {
  const double a = std::abs(d);
  return a < 1.0 ? 0.5 * d * d : a - 0.5;
}

}  // namespace

TEST_CASE("forward pass produces finite, well-shaped outputs for every variant") {
  const ModelConfig cfg = small_config();
  for (const VariantSpec& var : all_variants()) {
    CAPTURE(var.name);
    Scene s = make_model_scene(101);
    CoMtp<float> model(cfg, 11);
    HeteroGraph graph = build_graph(s, var.graph_config());
    SceneInputs<float> in = assemble_inputs<float>(s, graph, cfg);
    nn::Graph<float> g;
    auto out = model.forward(g, in, true);

    const int n_t = static_cast<int>(in.target_rows.size());
    REQUIRE(n_t >= 1);
    REQUIRE(out.logits >= 0);
    CHECK(g.val(out.logits).rows == n_t);
    CHECK(g.val(out.logits).cols == cfg.modes);
    CHECK(g.val(out.trajectories).rows == n_t * cfg.modes * cfg.future_steps);
    CHECK(g.val(out.trajectories).cols == 2);
    CHECK(all_finite(g.val(out.logits)));
    CHECK(all_finite(g.val(out.trajectories)));
    CHECK(g.val(out.loss).rows == 1);
    CHECK(std::isfinite(g.val(out.loss).at(0, 0)));
    CHECK(g.val(out.loss).at(0, 0) > 0.0f);

    if (!var.use_plan && !var.use_infra_pred) {
      CHECK(in.plan.count == 0);
      CHECK(in.preds.count == 0);
      CHECK(in.edges[static_cast<std::size_t>(NodeType::kFuturePlan)].count == 0);
      CHECK(in.edges[static_cast<std::size_t>(NodeType::kFutureInfraPred)].count == 0);
    }

    // mode seeds must actually diversify the trajectories
    const auto& traj = g.val(out.trajectories);
    bool modes_differ = false;
    for (int s2 = 0; s2 < cfg.future_steps && !modes_differ; ++s2)
      modes_differ = traj.at(s2, 0) != traj.at(cfg.future_steps + s2, 0) ||
                     traj.at(s2, 1) != traj.at(cfg.future_steps + s2, 1);
    CHECK(modes_differ);

    auto preds = extract_predictions(g, out, in, cfg);
    REQUIRE(static_cast<int>(preds.size()) == n_t);
    for (const auto& p : preds) {
      double sum = 0.0;
      for (double q : p.probabilities) {
        CHECK(q >= 0.0);
        sum += q;
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
      CHECK(static_cast<int>(p.modes.size()) == cfg.modes);
    }
  }
}

TEST_CASE("construction and forward are deterministic in the seed") {
  const ModelConfig cfg = small_config();
  Scene s = make_model_scene(202);
  const VariantSpec var = variant_by_name("full");
  HeteroGraph graph = build_graph(s, var.graph_config());
  SceneInputs<float> in = assemble_inputs<float>(s, graph, cfg);

  CoMtp<float> a(cfg, 17), b(cfg, 17), c(cfg, 18);
  nn::Graph<float> ga, gb, gc;
  auto oa = a.forward(ga, in, true);
  auto ob = b.forward(gb, in, true);
  auto oc = c.forward(gc, in, true);
  CHECK(bitwise_equal(ga.val(oa.logits), gb.val(ob.logits)));
  CHECK(bitwise_equal(ga.val(oa.trajectories), gb.val(ob.trajectories)));
  CHECK(ga.val(oa.loss).at(0, 0) == gb.val(ob.loss).at(0, 0));
  CHECK_FALSE(bitwise_equal(ga.val(oa.logits), gc.val(oc.logits)));

  nn::Graph<float> ga2;
  auto oa2 = a.forward(ga2, in, true);
  CHECK(bitwise_equal(ga.val(oa.trajectories), ga2.val(oa2.trajectories)));
}

TEST_CASE("outputs ignore the content of masked frames end to end") {
  const ModelConfig cfg = small_config();
  const VariantSpec var = variant_by_name("full");

  GeneratorConfig gc;
  gc.min_agents = 5;
  gc.max_agents = 6;
  gc.av_occlusion_rate = 0.4;
  Scene clean = generate_scene(gc, 303);
  Scene dirty = clean;
  for (auto* tracks : {&dirty.av_tracks, &dirty.infra_tracks}) {
    for (Track& t : *tracks)
      for (std::size_t i = 0; i < t.mask.size(); ++i)
        if (!t.mask[i]) {
          t.states[i].x = 4321.0 + static_cast<double>(i);
          t.states[i].y = -8765.0;
          t.states[i].heading = 1.234;
          t.states[i].speed = 99.0;
        }
  }
  for (FutureTrajectory& f : dirty.future_gt) {
    if (f.object_id == dirty.av_id) continue;
    for (std::size_t i = 0; i < f.mask.size(); ++i)
      if (!f.mask[i]) f.points[i] = {7777.0, -6666.0};
  }

  for (Scene* s : {&clean, &dirty}) {
    preprocess_scene(*s, 2);
    add_cv_predictions(*s);
  }

  CoMtp<float> model(cfg, 23);
  HeteroGraph g1 = build_graph(clean, var.graph_config());
  HeteroGraph g2 = build_graph(dirty, var.graph_config());
  SceneInputs<float> in1 = assemble_inputs<float>(clean, g1, cfg);
  SceneInputs<float> in2 = assemble_inputs<float>(dirty, g2, cfg);

  // the assembly contract: masked history rows are exactly zero
  for (const auto* batch : {&in1.av_objects, &in1.infra_objects})
    for (int r = 0; r < batch->positions.rows; ++r)
      if (!batch->mask[static_cast<std::size_t>(r)]) {
        for (int j = 0; j < 2; ++j) CHECK(batch->positions.at(r, j) == 0.0f);
        for (int j = 0; j < kObjectExtraDim; ++j) CHECK(batch->extras.at(r, j) == 0.0f);
      }

  nn::Graph<float> ga, gb;
  auto oa = model.forward(ga, in1, true);
  auto ob = model.forward(gb, in2, true);
  REQUIRE(ga.val(oa.logits).same_shape(gb.val(ob.logits)));
  CHECK(bitwise_equal(ga.val(oa.logits), gb.val(ob.logits)));
  CHECK(bitwise_equal(ga.val(oa.trajectories), gb.val(ob.trajectories)));
  CHECK(ga.val(oa.loss).at(0, 0) == gb.val(ob.loss).at(0, 0));

  SUBCASE("garbage in masked input rows and map padding changes nothing") {
    SceneInputs<float> in3 = in1;
    for (auto* batch : {&in3.av_objects, &in3.infra_objects})
      for (int r = 0; r < batch->positions.rows; ++r)
        if (!batch->mask[static_cast<std::size_t>(r)]) {
          batch->positions.at(r, 0) = 1e6f;
          batch->positions.at(r, 1) = -1e6f;
          for (int j = 0; j < kObjectExtraDim; ++j) batch->extras.at(r, j) = 512.0f;
        }
    for (int r = 0; r < in3.map.points.rows; ++r)
      if (!in3.map.point_mask[static_cast<std::size_t>(r)]) {
        in3.map.points.at(r, 0) = 3e5f;
        in3.map.points.at(r, 1) = -3e5f;
      }
    nn::Graph<float> g3;
    auto o3 = model.forward(g3, in3, true);
    CHECK(bitwise_equal(ga.val(oa.logits), g3.val(o3.logits)));
    CHECK(bitwise_equal(ga.val(oa.trajectories), g3.val(o3.trajectories)));
  }
}

TEST_CASE("loss equals the hand-computed winner-take-all objective") {
  const ModelConfig cfg = small_config();
  Scene s = make_model_scene(404);
  const VariantSpec var = variant_by_name("full");
  HeteroGraph graph = build_graph(s, var.graph_config());
  SceneInputs<double> in = assemble_inputs<double>(s, graph, cfg);

  CoMtp<double> model(cfg, 31);
  nn::Graph<double> g;
  auto out = model.forward(g, in, true);

  const auto& logits = g.val(out.logits);
  const auto& traj = g.val(out.trajectories);
  const int n_t = logits.rows;
  const int k = cfg.modes;
  const int steps = cfg.future_steps;

  double cls = 0.0, reg = 0.0;
  for (int t = 0; t < n_t; ++t) {
    const double norm = 1.0 / (2.0 * in.target_valid_counts[static_cast<std::size_t>(t)]);
    int best = -1;
    double best_cost = 0.0;
    for (int m = 0; m < k; ++m) {
      double cost = 0.0;
      for (int st = 0; st < steps; ++st) {
        const int row = t * steps + st;
        if (!in.target_future_valid[static_cast<std::size_t>(row)]) continue;
        const int prow = (t * k + m) * steps + st;
        cost += huber_ref(traj.at(prow, 0) - in.target_future.at(row, 0));
        cost += huber_ref(traj.at(prow, 1) - in.target_future.at(row, 1));
      }
      cost *= norm;
      if (best < 0 || cost < best_cost) {
        best_cost = cost;
        best = m;
      }
    }
    CHECK(best == out.winners[static_cast<std::size_t>(t)]);
    reg += best_cost;

    double mx = logits.at(t, 0);
    for (int m = 1; m < k; ++m) mx = std::max(mx, logits.at(t, m));
    double denom = 0.0;
    for (int m = 0; m < k; ++m) denom += std::exp(logits.at(t, m) - mx);
    cls += -(logits.at(t, best) - mx - std::log(denom));
  }
  cls /= n_t;
  reg /= n_t;

  CHECK(g.val(out.cls_loss).at(0, 0) == doctest::Approx(cls).epsilon(1e-9));
  CHECK(g.val(out.reg_loss).at(0, 0) == doctest::Approx(reg).epsilon(1e-9));
  CHECK(g.val(out.loss).at(0, 0) == doctest::Approx(0.1 * cls + 10.0 * reg).epsilon(1e-9));
}

TEST_CASE("only the winning mode receives regression gradient") {
  const ModelConfig cfg = small_config();
  Scene s = make_model_scene(505);
  const VariantSpec var = variant_by_name("full");
  HeteroGraph graph = build_graph(s, var.graph_config());
  SceneInputs<double> in = assemble_inputs<double>(s, graph, cfg);

  CoMtp<double> model(cfg, 41);
  model.store().zero_grads();
  nn::Graph<double> g;
  auto out = model.forward(g, in, true);
  g.backward(out.loss);

  const auto& dtraj = g.grad(out.trajectories);
  const int n_t = static_cast<int>(in.target_rows.size());
  for (int t = 0; t < n_t; ++t) {
    const int winner = out.winners[static_cast<std::size_t>(t)];
    for (int m = 0; m < cfg.modes; ++m) {
      bool any = false;
      for (int st = 0; st < cfg.future_steps; ++st) {
        const int row = (t * cfg.modes + m) * cfg.future_steps + st;
        if (dtraj.at(row, 0) != 0.0 || dtraj.at(row, 1) != 0.0) any = true;
      }
      if (m == winner)
        CHECK(any);
      else
        CHECK_FALSE(any);
    }
  }

  // classification reaches every mode through the softmax
  const auto& dlogits = g.grad(out.logits);
  for (int t = 0; t < n_t; ++t)
    for (int m = 0; m < cfg.modes; ++m) CHECK(dlogits.at(t, m) != 0.0);
}

TEST_CASE("analytic parameter gradients match central differences") {
  ModelConfig cfg;
  cfg.hidden_dim = 16;
  cfg.heads = 4;
  cfg.layers = 2;
  cfg.temporal_layers = 1;
  cfg.modes = 2;
  cfg.history_steps = 16;
  cfg.future_steps = 25;
  cfg.ffn_mult = 2;
  cfg.conv_channels = 8;

  Scene s = make_model_scene(606);
  const VariantSpec var = variant_by_name("full");
  HeteroGraph graph = build_graph(s, var.graph_config());
  SceneInputs<double> in = assemble_inputs<double>(s, graph, cfg);

  CoMtp<double> model(cfg, 51);
  auto loss_value = [&]() {
    nn::Graph<double> g;
    auto out = model.forward(g, in, true);
    return g.val(out.loss).at(0, 0);
  };

  model.store().zero_grads();
  nn::Graph<double> g;
  auto out = model.forward(g, in, true);
  g.backward(out.loss);

  const std::vector<std::string> names = {
      "enc.pos.w0",
      "enc.view.av.w1",
      "enc.view.infra.w0",
      "enc.proj.plan.w1",
      "enc.hist.pe",
      "enc.hist.att0.wq.w",
      "enc.hist.att0.ffn.w0",
      "enc.futT.att0.wv.w",
      "enc.map.pt.w0",
      "enc.map.out.w1",
      "enc.sig.gru.uz",
      "enc.sig.gru.wh",
      "enc.pose.w0",
      "enc.edge.obj_av_vehicle.w0",
      "ctca.0.att.map_lane.wk.w",
      "ctca.0.agg.w0",
      "ctca.0.ffn.obj_av_vehicle.w1",
      "ctca.1.edge.signal.w0",
      "ctca.1.ln2.g",
      "dec.modes",
      "dec.cross.wq.w",
      "dec.self.wo.w",
      "dec.cls.w1",
      "dec.reg.w1",
      "dec.conv1.w",
      "dec.out.w",
  };
  // Directional derivative per parameter tensor: aggregating over a random
  // unit direction keeps the signal well above finite-difference roundoff.
  Rng pick(99);
  const double eps = 1e-5;
  for (const auto& name : names) {
    CAPTURE(name);
    auto& entry = model.store().entry(name);
    std::vector<double> dir(entry.value.data.size());
    double norm2 = 0.0;
    for (auto& d : dir) {
      d = pick.normal();
      norm2 += d * d;
    }
    const double inv = 1.0 / std::sqrt(norm2);
    double an = 0.0;
    for (std::size_t i = 0; i < dir.size(); ++i) {
      dir[i] *= inv;
      an += entry.grad.data[i] * dir[i];
    }
    const std::vector<double> saved = entry.value.data;
    for (std::size_t i = 0; i < dir.size(); ++i) entry.value.data[i] = saved[i] + eps * dir[i];
    const double up = loss_value();
    for (std::size_t i = 0; i < dir.size(); ++i) entry.value.data[i] = saved[i] - eps * dir[i];
    const double dn = loss_value();
    entry.value.data = saved;
    const double fd = (up - dn) / (2.0 * eps);
    CHECK(std::abs(fd - an) < 1e-4 * std::max(std::abs(fd), std::abs(an)) + 1e-7);
  }
}
