#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "coopred/graph.hpp"
#include "coopred/model/config.hpp"
#include "coopred/model/inputs.hpp"
#include "coopred/nn/autodiff.hpp"
#include "coopred/nn/params.hpp"

namespace coopred {

inline constexpr int kKindEmbedDim = 16;

/// Per-target prediction in the target's own reference frame.
struct TargetPrediction {
  std::string object_id;
  ReferenceFrame frame;
  std::vector<double> probabilities;
  std::vector<std::vector<Vec2>> modes;
};

/// Heterogeneous graph transformer over cooperative scenes: per-type encoders
/// feed typed message-passing layers, then an anchor-free multi-modal decoder
/// emits K trajectories plus a score per target agent.
template <typename T>
class CoMtp {
 public:
  using Graph = nn::Graph<T>;
  using Id = typename Graph::Id;

  struct Output {
    Id logits = -1;        // [n_targets, modes]
    Id trajectories = -1;  // [n_targets * modes * future_steps, 2], target-local
    Id loss = -1;
    Id cls_loss = -1;
    Id reg_loss = -1;
    std::vector<int> winners;  // per-target mode with the lowest regression cost
  };

  CoMtp(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg), store_(seed) {
    cfg_.validate();
    build_params();
  }

  const ModelConfig& config() const { return cfg_; }
  nn::ParamStore<T>& store() { return store_; }
  const nn::ParamStore<T>& store() const { return store_; }

  Output forward(Graph& g, const SceneInputs<T>& in, bool with_loss) {
    Ctx c{g, *this, {}};
    Id n0 = encode(c, in);
    std::array<Id, kNumNodeTypes> pose{};
    std::array<Id, kNumNodeTypes> edges{};
    init_edges(c, in, n0, pose, edges);
    Id nodes = n0;
    for (int layer = 0; layer < cfg_.layers; ++layer)
      message_pass(c, in, layer, pose, nodes, edges);
    Output out = decode(c, in, n0, nodes, edges);
    if (with_loss) attach_loss(c, in, out);
    return out;
  }

 private:
  struct Ctx {
    Graph& g;
    CoMtp& m;
    std::unordered_map<std::string, Id> bound;

    Id p(const std::string& name) {
      auto it = bound.find(name);
      if (it != bound.end()) return it->second;
      auto& e = m.store_.entry(name);
      Id id = g.param(e.value, e.grad);
      bound.emplace(name, id);
      return id;
    }
    Id lin(Id x, const std::string& base) {
      return g.linear(x, p(base + ".w"), p(base + ".b"));
    }
    Id mlp2(Id x, const std::string& base) {
      Id h = g.gelu(g.linear(x, p(base + ".w0"), p(base + ".b0")));
      return g.linear(h, p(base + ".w1"), p(base + ".b1"));
    }
    Id ln(Id x, const std::string& base) {
      return g.layer_norm(x, p(base + ".g"), p(base + ".b"));
    }
  };

  ModelConfig cfg_;
  nn::ParamStore<T> store_;

  using Init = nn::Init;

  void make_linear(const std::string& base, int in, int out) {
    store_.create(base + ".w", in, out, Init::kXavier);
    store_.create(base + ".b", 1, out, Init::kZero);
  }
  void make_mlp2(const std::string& base, int in, int hidden, int out) {
    store_.create(base + ".w0", in, hidden, Init::kXavier);
    store_.create(base + ".b0", 1, hidden, Init::kZero);
    store_.create(base + ".w1", hidden, out, Init::kXavier);
    store_.create(base + ".b1", 1, out, Init::kZero);
  }
  void make_ln(const std::string& base) {
    store_.create(base + ".g", 1, cfg_.hidden_dim, Init::kOnes);
    store_.create(base + ".b", 1, cfg_.hidden_dim, Init::kZero);
  }
  void make_mha(const std::string& base, bool with_out) {
    const int d = cfg_.hidden_dim;
    make_linear(base + ".wq", d, d);
    make_linear(base + ".wk", d, d);
    make_linear(base + ".wv", d, d);
    if (with_out) make_linear(base + ".wo", d, d);
  }
  void make_temporal(const std::string& base, int steps) {
    const int d = cfg_.hidden_dim;
    store_.create(base + ".pe", steps, d, Init::kNormalSmall);
    for (int l = 0; l < cfg_.temporal_layers; ++l) {
      const std::string pfx = base + ".att" + std::to_string(l);
      make_mha(pfx, true);
      make_ln(pfx + ".ln1");
      make_mlp2(pfx + ".ffn", d, cfg_.ffn_mult * d, d);
      make_ln(pfx + ".ln2");
    }
  }

  void build_params() {
    const int d = cfg_.hidden_dim;
    make_mlp2("enc.pos", 2, d, d);
    make_mlp2("enc.pose", kPoseDim, d, d);
    make_mlp2("enc.view.av", d + kObjectExtraDim, d, d);
    make_mlp2("enc.view.infra", d + kObjectExtraDim, d, d);
    make_mlp2("enc.proj.plan", d, d, d);
    make_mlp2("enc.proj.pred", d, d, d);
    make_temporal("enc.hist", cfg_.history_steps);
    make_temporal("enc.futT", cfg_.future_steps);

    make_mlp2("enc.map.pt", 2, d, d);
    make_linear("enc.map.kind", kMapKindDim, kKindEmbedDim);
    make_mlp2("enc.map.out", d + kKindEmbedDim, d, d);

    make_linear("enc.sig.in", kSignalPhaseDim, d);
    for (const char* gate : {"z", "r", "h"}) {
      store_.create(std::string("enc.sig.gru.w") + gate, d, d, Init::kXavier);
      store_.create(std::string("enc.sig.gru.u") + gate, d, d, Init::kXavier);
      store_.create(std::string("enc.sig.gru.b") + gate, 1, d, Init::kZero);
    }
    make_linear("enc.sig.out", d + 2, d);

    for (int t = 0; t < kNumNodeTypes; ++t)
      make_mlp2(std::string("enc.edge.") + to_string(static_cast<NodeType>(t)), 2 * d, d, d);

    for (int layer = 0; layer < cfg_.layers; ++layer) {
      const std::string pfx = "ctca." + std::to_string(layer);
      for (int t = 0; t < kNumNodeTypes; ++t)
        make_mha(pfx + ".att." + to_string(static_cast<NodeType>(t)), false);
      make_mlp2(pfx + ".agg", kNumNodeTypes * d, d, d);
      make_ln(pfx + ".ln1");
      for (int t = 0; t < kNumNodeTypes; ++t)
        make_mlp2(pfx + ".ffn." + to_string(static_cast<NodeType>(t)), d, cfg_.ffn_mult * d, d);
      make_ln(pfx + ".ln2");
      for (int t = 0; t < kNumNodeTypes; ++t)
        make_mlp2(pfx + ".edge." + to_string(static_cast<NodeType>(t)), 3 * d, d, d);
    }

    store_.create("dec.modes", cfg_.modes, d, Init::kNormalSmall);
    make_mha("dec.cross", true);
    make_ln("dec.cross.ln");
    make_mha("dec.self", true);
    make_ln("dec.self.ln");
    make_mlp2("dec.cls", d, d, 1);
    make_mlp2("dec.reg", 2 * d, d, cfg_.future_steps * cfg_.conv_channels);
    for (int i = 0; i < 3; ++i)
      make_linear("dec.conv" + std::to_string(i), 3 * cfg_.conv_channels, cfg_.conv_channels);
    make_linear("dec.out", cfg_.conv_channels, 2);
  }

  // Residual multi-head block over padded sequences: attention then
  // position-wise feed-forward, each followed by LayerNorm.
  Id attn_block(Ctx& c, Id x, int batch, const std::vector<std::uint8_t>& mask,
                const std::string& pfx) {
    Graph& g = c.g;
    Id att = g.masked_attention(c.lin(x, pfx + ".wq"), c.lin(x, pfx + ".wk"),
                                c.lin(x, pfx + ".wv"), batch, cfg_.heads, mask);
    Id y = c.ln(g.add(x, c.lin(att, pfx + ".wo")), pfx + ".ln1");
    return c.ln(g.add(y, c.mlp2(y, pfx + ".ffn")), pfx + ".ln2");
  }

  // Shared temporal transformer over one or two per-view blocks; returns the
  // per-sequence readout rows in block order.
  Id temporal_readout(Ctx& c, const std::vector<Id>& blocks,
                      const std::vector<const std::vector<std::uint8_t>*>& masks,
                      const std::vector<const std::vector<int>*>& readouts, int steps,
                      const std::string& base) {
    Graph& g = c.g;
    Id x = blocks.size() == 1 ? blocks[0] : g.concat_rows(blocks);
    std::vector<std::uint8_t> mask;
    for (const auto* m : masks) mask.insert(mask.end(), m->begin(), m->end());
    const int batch = static_cast<int>(mask.size()) / steps;
    x = g.tile_add(x, c.p(base + ".pe"));
    for (int l = 0; l < cfg_.temporal_layers; ++l)
      x = attn_block(c, x, batch, mask, base + ".att" + std::to_string(l));
    std::vector<int> idx;
    int offset = 0;
    for (std::size_t b = 0; b < readouts.size(); ++b) {
      for (int r : *readouts[b]) idx.push_back(offset + r);
      offset += static_cast<int>(masks[b]->size());
    }
    return g.gather_rows(x, std::move(idx));
  }

  Id encode_history(Ctx& c, const SceneInputs<T>& in) {
    Graph& g = c.g;
    std::vector<Id> blocks;
    std::vector<const std::vector<std::uint8_t>*> masks;
    std::vector<const std::vector<int>*> readouts;
    for (const auto* b : {&in.av_objects, &in.infra_objects}) {
      if (b->count == 0) continue;
      Id pos = c.mlp2(g.leaf(b->positions), "enc.pos");
      Id x = g.concat_cols({pos, g.leaf(b->extras)});
      blocks.push_back(c.mlp2(x, b == &in.av_objects ? "enc.view.av" : "enc.view.infra"));
      masks.push_back(&b->mask);
      readouts.push_back(&b->readout);
    }
    if (blocks.empty()) throw std::runtime_error("network: no object history");
    return temporal_readout(c, blocks, masks, readouts, cfg_.history_steps, "enc.hist");
  }

  Id encode_futures(Ctx& c, const SceneInputs<T>& in) {
    Graph& g = c.g;
    std::vector<Id> blocks;
    std::vector<const std::vector<std::uint8_t>*> masks;
    std::vector<const std::vector<int>*> readouts;
    std::vector<std::vector<std::uint8_t>> local_masks;
    for (const auto* b : {&in.plan, &in.preds}) {
      if (b->count == 0) continue;
      Id pos = c.mlp2(g.leaf(b->positions), "enc.pos");
      blocks.push_back(c.mlp2(pos, b == &in.plan ? "enc.proj.plan" : "enc.proj.pred"));
      local_masks.emplace_back(static_cast<std::size_t>(b->positions.rows), std::uint8_t{1});
      readouts.push_back(&b->readout);
    }
    if (blocks.empty()) return -1;
    for (auto& m : local_masks) masks.push_back(&m);
    return temporal_readout(c, blocks, masks, readouts, cfg_.future_steps, "enc.futT");
  }

  Id encode_map(Ctx& c, const MapBatch<T>& map) {
    Graph& g = c.g;
    if (map.count == 0) return -1;
    Id pt = c.mlp2(g.leaf(map.points), "enc.map.pt");
    Id pooled = g.row_group_max(pt, map.segment_points, map.point_mask);
    Id kind = c.lin(g.leaf(map.kind), "enc.map.kind");
    return c.mlp2(g.concat_cols({pooled, kind}), "enc.map.out");
  }

  Id encode_signals(Ctx& c, const SignalBatch<T>& sig) {
    Graph& g = c.g;
    if (sig.count == 0) return -1;
    const int steps = cfg_.history_steps;
    Id x = c.lin(g.leaf(sig.phases), "enc.sig.in");
    Id h = g.zeros(sig.count, cfg_.hidden_dim);
    Id wz = c.p("enc.sig.gru.wz"), uz = c.p("enc.sig.gru.uz"), bz = c.p("enc.sig.gru.bz");
    Id wr = c.p("enc.sig.gru.wr"), ur = c.p("enc.sig.gru.ur"), br = c.p("enc.sig.gru.br");
    Id wh = c.p("enc.sig.gru.wh"), uh = c.p("enc.sig.gru.uh"), bh = c.p("enc.sig.gru.bh");
    for (int t = 0; t < steps; ++t) {
      std::vector<int> rows(static_cast<std::size_t>(sig.count));
      for (int s = 0; s < sig.count; ++s) rows[static_cast<std::size_t>(s)] = s * steps + t;
      Id xt = g.gather_rows(x, std::move(rows));
      Id zg = g.sigmoid_op(g.add(g.add_bias(g.matmul(xt, wz), bz), g.matmul(h, uz)));
      Id rg = g.sigmoid_op(g.add(g.add_bias(g.matmul(xt, wr), br), g.matmul(h, ur)));
      Id hh = g.tanh_op(g.add(g.add_bias(g.matmul(xt, wh), bh), g.matmul(g.mul(rg, h), uh)));
      // h <- h + z * (hh - h)
      h = g.add(h, g.mul(zg, g.add(hh, g.scale(h, T(-1)))));
    }
    // a point signal sits at its own frame origin, so the position input is a
    // constant zero pair kept for interface parity with located inputs
    return c.lin(g.concat_cols({h, g.zeros(sig.count, 2)}), "enc.sig.out");
  }

  Id encode(Ctx& c, const SceneInputs<T>& in) {
    Graph& g = c.g;
    Id objects = encode_history(c, in);
    Id futures = encode_futures(c, in);
    Id map = encode_map(c, in.map);
    Id signals = encode_signals(c, in.signals);
    std::vector<Id> blocks{objects};
    if (futures >= 0) blocks.push_back(futures);
    if (map >= 0) blocks.push_back(map);
    if (signals >= 0) blocks.push_back(signals);
    Id n0 = blocks.size() == 1 ? blocks[0] : g.concat_rows(blocks);
    if (g.val(n0).rows != in.node_count) throw std::runtime_error("network: node row mismatch");
    return n0;
  }

  void init_edges(Ctx& c, const SceneInputs<T>& in, Id n0, std::array<Id, kNumNodeTypes>& pose,
                  std::array<Id, kNumNodeTypes>& edges) {
    Graph& g = c.g;
    for (int t = 0; t < kNumNodeTypes; ++t) {
      const auto& bucket = in.edges[static_cast<std::size_t>(t)];
      if (bucket.count == 0) {
        pose[static_cast<std::size_t>(t)] = -1;
        edges[static_cast<std::size_t>(t)] = -1;
        continue;
      }
      Id gamma = c.mlp2(g.leaf(bucket.gamma), "enc.pose");
      Id src = g.gather_rows(n0, bucket.source_rows);
      pose[static_cast<std::size_t>(t)] = gamma;
      edges[static_cast<std::size_t>(t)] =
          c.mlp2(g.concat_cols({src, gamma}),
                 std::string("enc.edge.") + to_string(static_cast<NodeType>(t)));
    }
  }

  // One typed message-passing layer: per-type edge attention into each node,
  // type slots concatenated and mixed, per-node-type feed-forward, then edge
  // refresh from the pre-update node states.
  void message_pass(Ctx& c, const SceneInputs<T>& in, int layer,
                    const std::array<Id, kNumNodeTypes>& pose, Id& nodes,
                    std::array<Id, kNumNodeTypes>& edges) {
    Graph& g = c.g;
    const std::string pfx = "ctca." + std::to_string(layer);
    std::vector<Id> slots(kNumNodeTypes);
    for (int t = 0; t < kNumNodeTypes; ++t) {
      const auto& bucket = in.edges[static_cast<std::size_t>(t)];
      if (bucket.count == 0) {
        slots[static_cast<std::size_t>(t)] = g.zeros(in.node_count, cfg_.hidden_dim);
        continue;
      }
      const std::string att = pfx + ".att." + to_string(static_cast<NodeType>(t));
      slots[static_cast<std::size_t>(t)] = g.ragged_attention(
          c.lin(nodes, att + ".wq"), c.lin(edges[static_cast<std::size_t>(t)], att + ".wk"),
          c.lin(edges[static_cast<std::size_t>(t)], att + ".wv"), cfg_.heads, bucket.segments);
    }
    Id mixed = c.mlp2(g.concat_cols(slots), pfx + ".agg");
    Id x = c.ln(g.add(nodes, mixed), pfx + ".ln1");
    std::vector<Id> ffn_parts;
    for (int t = 0; t < kNumNodeTypes; ++t) {
      const int b = in.type_begin[static_cast<std::size_t>(t)];
      const int e = in.type_begin[static_cast<std::size_t>(t) + 1];
      if (b == e) continue;
      ffn_parts.push_back(c.mlp2(g.slice_rows(x, b, e),
                                 pfx + ".ffn." + to_string(static_cast<NodeType>(t))));
    }
    Id f = ffn_parts.size() == 1 ? ffn_parts[0] : g.concat_rows(ffn_parts);
    Id updated = c.ln(g.add(x, f), pfx + ".ln2");
    for (int t = 0; t < kNumNodeTypes; ++t) {
      const auto& bucket = in.edges[static_cast<std::size_t>(t)];
      if (bucket.count == 0) continue;
      Id src = g.gather_rows(nodes, bucket.source_rows);
      edges[static_cast<std::size_t>(t)] = c.mlp2(
          g.concat_cols({src, pose[static_cast<std::size_t>(t)], edges[static_cast<std::size_t>(t)]}),
          pfx + ".edge." + to_string(static_cast<NodeType>(t)));
    }
    nodes = updated;
  }

  Output decode(Ctx& c, const SceneInputs<T>& in, Id n0, Id nodes,
                const std::array<Id, kNumNodeTypes>& edges) {
    Graph& g = c.g;
    Output out;
    const int n_t = static_cast<int>(in.target_rows.size());
    if (n_t == 0) return out;
    const int k = cfg_.modes;
    const int steps = cfg_.future_steps;

    Id tgt = g.repeat_rows(g.gather_rows(nodes, in.target_rows), k);
    Id seeds = g.tile_add(tgt, c.p("dec.modes"));  // [n_t * k, d]

    std::vector<Id> edge_blocks;
    for (int t = 0; t < kNumNodeTypes; ++t)
      if (edges[static_cast<std::size_t>(t)] >= 0)
        edge_blocks.push_back(edges[static_cast<std::size_t>(t)]);
    Id e_all = edge_blocks.size() == 1 ? edge_blocks[0] : g.concat_rows(edge_blocks);
    Id kv = g.gather_rows(e_all, in.target_edge_rows);
    std::vector<nn::AttentionSegment> segs;
    int off = 0;
    for (int t = 0; t < n_t; ++t) {
      const int cnt = in.target_edge_counts[static_cast<std::size_t>(t)];
      for (int m = 0; m < k; ++m) segs.push_back({t * k + m, off, off + cnt});
      off += cnt;
    }
    Id cross = g.ragged_attention(c.lin(seeds, "dec.cross.wq"), c.lin(kv, "dec.cross.wk"),
                                  c.lin(kv, "dec.cross.wv"), cfg_.heads, std::move(segs));
    Id x = c.ln(g.add(seeds, c.lin(cross, "dec.cross.wo")), "dec.cross.ln");

    std::vector<std::uint8_t> all_on(static_cast<std::size_t>(n_t) * k, std::uint8_t{1});
    Id self_att = g.masked_attention(c.lin(x, "dec.self.wq"), c.lin(x, "dec.self.wk"),
                                     c.lin(x, "dec.self.wv"), n_t, cfg_.heads, all_on);
    Id refined = c.ln(g.add(x, c.lin(self_att, "dec.self.wo")), "dec.self.ln");

    out.logits = g.reshape(c.mlp2(refined, "dec.cls"), n_t, k);

    Id anchor = g.repeat_rows(g.gather_rows(n0, in.target_rows), k);
    Id z = c.mlp2(g.concat_cols({refined, anchor}), "dec.reg");
    Id seq = g.reshape(z, n_t * k * steps, cfg_.conv_channels);
    seq = g.gelu(g.conv1d3(seq, c.p("dec.conv0.w"), c.p("dec.conv0.b"), steps));
    seq = g.gelu(g.conv1d3(seq, c.p("dec.conv1.w"), c.p("dec.conv1.b"), steps));
    seq = g.conv1d3(seq, c.p("dec.conv2.w"), c.p("dec.conv2.b"), steps);
    out.trajectories = c.lin(seq, "dec.out");
    return out;
  }

  static T huber(T d) {
    const T a = std::abs(d);
    return a < T(1) ? T(0.5) * d * d : a - T(0.5);
  }

  // Winner-take-all loss: the mode closest to the ground truth under the
  // normalized smooth-L1 cost trains the regressor, and its index is the
  // classification label.
  void attach_loss(Ctx& c, const SceneInputs<T>& in, Output& out) {
    Graph& g = c.g;
    const int n_t = static_cast<int>(in.target_rows.size());
    if (n_t == 0) throw std::runtime_error("network: loss requested without targets");
    const int k = cfg_.modes;
    const int steps = cfg_.future_steps;
    const auto& traj = g.val(out.trajectories);

    out.winners.resize(static_cast<std::size_t>(n_t));
    std::vector<Id> reg_parts;
    for (int t = 0; t < n_t; ++t) {
      const T norm = T(1) / (T(2) * T(in.target_valid_counts[static_cast<std::size_t>(t)]));
      int best = 0;
      T best_cost = T(0);
      for (int m = 0; m < k; ++m) {
        T cost = T(0);
        for (int s = 0; s < steps; ++s) {
          const std::size_t row = static_cast<std::size_t>(t) * steps + static_cast<std::size_t>(s);
          if (!in.target_future_valid[row]) continue;
          const int prow = (t * k + m) * steps + s;
          cost += huber(traj.at(prow, 0) - in.target_future.at(static_cast<int>(row), 0));
          cost += huber(traj.at(prow, 1) - in.target_future.at(static_cast<int>(row), 1));
        }
        cost *= norm;
        if (m == 0 || cost < best_cost) {
          best_cost = cost;
          best = m;
        }
      }
      out.winners[static_cast<std::size_t>(t)] = best;

      nn::Tensor<T> target(steps, 2);
      std::vector<std::uint8_t> valid(static_cast<std::size_t>(steps));
      for (int s = 0; s < steps; ++s) {
        const int row = t * steps + s;
        target.at(s, 0) = in.target_future.at(row, 0);
        target.at(s, 1) = in.target_future.at(row, 1);
        valid[static_cast<std::size_t>(s)] = in.target_future_valid[static_cast<std::size_t>(row)];
      }
      const int r0 = (t * k + best) * steps;
      reg_parts.push_back(
          g.smooth_l1(g.slice_rows(out.trajectories, r0, r0 + steps), target, valid, norm));
    }
    std::vector<int> labels(out.winners.begin(), out.winners.end());
    out.cls_loss = g.cross_entropy_mean(out.logits, std::move(labels));
    out.reg_loss = g.scale(g.add_scalars(reg_parts), T(1) / T(n_t));
    out.loss = g.add_scalars({g.scale(out.cls_loss, T(0.1)), g.scale(out.reg_loss, T(10))});
  }
};

/// Reads mode scores and trajectories out of a finished forward pass.
template <typename T>
std::vector<TargetPrediction> extract_predictions(const nn::Graph<T>& g,
                                                  const typename CoMtp<T>::Output& out,
                                                  const SceneInputs<T>& in,
                                                  const ModelConfig& cfg) {
  std::vector<TargetPrediction> result;
  const int n_t = static_cast<int>(in.target_rows.size());
  if (n_t == 0 || out.logits < 0) return result;
  const auto& logits = g.val(out.logits);
  const auto& traj = g.val(out.trajectories);
  result.resize(static_cast<std::size_t>(n_t));
  for (int t = 0; t < n_t; ++t) {
    auto& p = result[static_cast<std::size_t>(t)];
    p.object_id = in.target_ids[static_cast<std::size_t>(t)];
    p.frame = in.target_frames[static_cast<std::size_t>(t)];
    p.probabilities.resize(static_cast<std::size_t>(cfg.modes));
    double mx = -1e300;
    for (int m = 0; m < cfg.modes; ++m)
      mx = std::max(mx, static_cast<double>(logits.at(t, m)));
    double sum = 0.0;
    for (int m = 0; m < cfg.modes; ++m) {
      const double e = std::exp(static_cast<double>(logits.at(t, m)) - mx);
      p.probabilities[static_cast<std::size_t>(m)] = e;
      sum += e;
    }
    for (auto& v : p.probabilities) v /= sum;
    p.modes.assign(static_cast<std::size_t>(cfg.modes), {});
    for (int m = 0; m < cfg.modes; ++m) {
      auto& mode = p.modes[static_cast<std::size_t>(m)];
      mode.resize(static_cast<std::size_t>(cfg.future_steps));
      for (int s = 0; s < cfg.future_steps; ++s) {
        const int row = (t * cfg.modes + m) * cfg.future_steps + s;
        mode[static_cast<std::size_t>(s)] = {static_cast<double>(traj.at(row, 0)),
                                             static_cast<double>(traj.at(row, 1))};
      }
    }
  }
  return result;
}

}  // namespace coopred
