#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "coopred/graph.hpp"
#include "coopred/model/config.hpp"
#include "coopred/nn/autodiff.hpp"
#include "coopred/nn/tensor.hpp"
#include "coopred/preprocess.hpp"
#include "coopred/scene.hpp"

namespace coopred {

inline constexpr int kObjectExtraDim = 9;  // cos, sin, speed, bbox, class one-hot
inline constexpr int kSignalPhaseDim = 4;
inline constexpr int kMapKindDim = 4;
inline constexpr int kPoseDim = 4;  // dx, dy, cos dtheta, sin dtheta

/// History sequences of one view, rows aligned with the node order.
template <typename T>
struct ObjectBatch {
  int count = 0;
  nn::Tensor<T> positions;       // [count * T_h, 2]
  nn::Tensor<T> extras;          // [count * T_h, kObjectExtraDim]
  std::vector<std::uint8_t> mask;
  std::vector<int> readout;      // last valid row per sequence
};

template <typename T>
struct FutureBatch {
  int count = 0;
  nn::Tensor<T> positions;  // [count * T_f, 2]
  std::vector<int> readout;
};

template <typename T>
struct MapBatch {
  int count = 0;
  nn::Tensor<T> points;  // [count * segment_points, 2]
  std::vector<std::uint8_t> point_mask;
  nn::Tensor<T> kind;    // [count, kMapKindDim]
  int segment_points = 0;
};

template <typename T>
struct SignalBatch {
  int count = 0;
  nn::Tensor<T> phases;  // [count * T_h, kSignalPhaseDim] one-hot
};

/// In-edges of one edge type, ordered by (dest, source); each dest's edges
/// form one attention segment whose q_row is the dest node row.
template <typename T>
struct EdgeBatch {
  int count = 0;
  nn::Tensor<T> gamma;  // [count, kPoseDim]
  std::vector<int> source_rows;
  std::vector<nn::AttentionSegment> segments;
};

template <typename T>
struct SceneInputs {
  int node_count = 0;
  std::array<int, kNumNodeTypes + 1> type_begin{};
  ObjectBatch<T> av_objects;     // node rows [type_begin[0], type_begin[3])
  ObjectBatch<T> infra_objects;  // node rows [type_begin[3], type_begin[6])
  FutureBatch<T> plan;
  FutureBatch<T> preds;
  MapBatch<T> map;               // node rows [type_begin[8], type_begin[11])
  SignalBatch<T> signals;
  std::array<EdgeBatch<T>, kNumNodeTypes> edges;

  std::vector<int> target_rows;          // node rows of decode targets
  std::vector<int> target_edge_rows;     // rows into the type-concatenated edge tensor
  std::vector<int> target_edge_counts;   // per target
  nn::Tensor<T> target_future;           // [n_targets * T_f, 2] in target frames
  std::vector<std::uint8_t> target_future_valid;
  std::vector<int> target_valid_counts;
  std::vector<std::string> target_ids;
  std::vector<ReferenceFrame> target_frames;
};

namespace detail_inputs {

inline int object_class_index(ObjectType t) { return static_cast<int>(t); }

template <typename T>
void fill_object_batch(ObjectBatch<T>& batch, const Scene& scene, const HeteroGraph& graph,
                       int row_begin, int row_end, const ModelConfig& cfg) {
  const int steps = cfg.history_steps;
  batch.count = row_end - row_begin;
  batch.positions = nn::Tensor<T>(batch.count * steps, 2);
  batch.extras = nn::Tensor<T>(batch.count * steps, kObjectExtraDim);
  batch.mask.assign(static_cast<std::size_t>(batch.count) * steps, 0);
  batch.readout.clear();
  for (int r = row_begin; r < row_end; ++r) {
    const NodeDescriptor& node = graph.nodes[static_cast<std::size_t>(r)];
    const std::vector<Track>& tracks =
        node.view == View::kAv ? scene.av_tracks : scene.infra_tracks;
    const Track& track = tracks[static_cast<std::size_t>(node.track_index)];
    if (static_cast<int>(track.states.size()) != steps)
      throw std::invalid_argument("inputs: track length does not match history_steps");
    const Track local = to_local(track, node.frame);
    const int base = (r - row_begin) * steps;
    int last = 0;
    for (int t = 0; t < steps; ++t) {
      if (!local.mask[static_cast<std::size_t>(t)]) continue;
      const ObjectState& s = local.states[static_cast<std::size_t>(t)];
      batch.mask[static_cast<std::size_t>(base + t)] = 1;
      last = base + t;
      batch.positions.at(base + t, 0) = static_cast<T>(s.x * cfg.pos_scale);
      batch.positions.at(base + t, 1) = static_cast<T>(s.y * cfg.pos_scale);
      T* e = batch.extras.row(base + t);
      e[0] = static_cast<T>(std::cos(s.heading));
      e[1] = static_cast<T>(std::sin(s.heading));
      e[2] = static_cast<T>(s.speed * cfg.pos_scale);
      e[3] = static_cast<T>(track.bbox[0] * cfg.pos_scale);
      e[4] = static_cast<T>(track.bbox[1] * cfg.pos_scale);
      e[5] = static_cast<T>(track.bbox[2] * cfg.pos_scale);
      e[6 + object_class_index(track.object_type)] = T(1);
    }
    batch.readout.push_back(last);
  }
}

template <typename T>
void fill_future_batch(FutureBatch<T>& batch, const Scene& scene, const HeteroGraph& graph,
                       int row_begin, int row_end, const ModelConfig& cfg) {
  const int steps = cfg.future_steps;
  batch.count = row_end - row_begin;
  batch.positions = nn::Tensor<T>(batch.count * steps, 2);
  batch.readout.clear();
  for (int r = row_begin; r < row_end; ++r) {
    const NodeDescriptor& node = graph.nodes[static_cast<std::size_t>(r)];
    const std::vector<Vec2>& pts =
        node.type == NodeType::kFuturePlan
            ? scene.av_planning
            : scene.infra_predictions[static_cast<std::size_t>(node.pred_index)].points;
    if (static_cast<int>(pts.size()) != steps)
      throw std::invalid_argument("inputs: future length does not match future_steps");
    const std::vector<Vec2> local = to_local(pts, node.frame);
    const int base = (r - row_begin) * steps;
    for (int t = 0; t < steps; ++t) {
      batch.positions.at(base + t, 0) = static_cast<T>(local[static_cast<std::size_t>(t)].x *
                                                       cfg.pos_scale);
      batch.positions.at(base + t, 1) = static_cast<T>(local[static_cast<std::size_t>(t)].y *
                                                       cfg.pos_scale);
    }
    batch.readout.push_back(base + steps - 1);
  }
}

}  // namespace detail_inputs

/// Converts a preprocessed scene plus its graph into the dense, type-blocked
/// tensors the network consumes. All coordinates are expressed in the
/// owning node's frame; masked history steps stay exactly zero.
template <typename T>
SceneInputs<T> assemble_inputs(const Scene& scene, const HeteroGraph& graph,
                               const ModelConfig& cfg) {
  cfg.validate();
  SceneInputs<T> in;
  in.node_count = static_cast<int>(graph.nodes.size());
  in.type_begin = graph.type_begin;

  detail_inputs::fill_object_batch(in.av_objects, scene, graph, graph.type_begin[0],
                                   graph.type_begin[3], cfg);
  detail_inputs::fill_object_batch(in.infra_objects, scene, graph, graph.type_begin[3],
                                   graph.type_begin[6], cfg);
  detail_inputs::fill_future_batch(in.plan, scene, graph, graph.type_begin[6],
                                   graph.type_begin[7], cfg);
  detail_inputs::fill_future_batch(in.preds, scene, graph, graph.type_begin[7],
                                   graph.type_begin[8], cfg);

  {
    const int begin = graph.type_begin[8], end = graph.type_begin[11];
    MapBatch<T>& m = in.map;
    m.count = end - begin;
    m.segment_points = m.count > 0
                           ? static_cast<int>(graph.nodes[static_cast<std::size_t>(begin)]
                                                  .points.size())
                           : 0;
    m.points = nn::Tensor<T>(m.count * m.segment_points, 2);
    m.point_mask.assign(static_cast<std::size_t>(m.count) * m.segment_points, 0);
    m.kind = nn::Tensor<T>(m.count, kMapKindDim);
    for (int r = begin; r < end; ++r) {
      const NodeDescriptor& node = graph.nodes[static_cast<std::size_t>(r)];
      const std::vector<Vec2> local = to_local(node.points, node.frame);
      const int base = (r - begin) * m.segment_points;
      for (int p = 0; p < m.segment_points; ++p) {
        m.points.at(base + p, 0) = static_cast<T>(local[static_cast<std::size_t>(p)].x *
                                                  cfg.pos_scale);
        m.points.at(base + p, 1) = static_cast<T>(local[static_cast<std::size_t>(p)].y *
                                                  cfg.pos_scale);
        if (p < node.valid_points) m.point_mask[static_cast<std::size_t>(base + p)] = 1;
      }
      m.kind.at(r - begin, static_cast<int>(node.map_kind)) = T(1);
    }
  }

  {
    const int begin = graph.type_begin[11], end = graph.type_begin[12];
    SignalBatch<T>& s = in.signals;
    s.count = end - begin;
    s.phases = nn::Tensor<T>(s.count * cfg.history_steps, kSignalPhaseDim);
    for (int r = begin; r < end; ++r) {
      const NodeDescriptor& node = graph.nodes[static_cast<std::size_t>(r)];
      const SignalRecord* rec = nullptr;
      for (const SignalRecord& cand : scene.signals)
        if (cand.signal_id == node.ref_id) rec = &cand;
      if (rec == nullptr || static_cast<int>(rec->phase_sequence.size()) != cfg.history_steps)
        throw std::invalid_argument("inputs: signal sequence does not match history_steps");
      const int base = (r - begin) * cfg.history_steps;
      for (int t = 0; t < cfg.history_steps; ++t)
        s.phases.at(base + t,
                    static_cast<int>(rec->phase_sequence[static_cast<std::size_t>(t)])) = T(1);
    }
  }

  // edges bucketed by type; remember where each graph edge lands so target
  // in-edges can be located in the concatenated edge tensor later
  std::vector<std::pair<int, int>> edge_slot(graph.edges.size());
  for (int d = 0; d < in.node_count; ++d) {
    for (int e = graph.in_begin[static_cast<std::size_t>(d)];
         e < graph.in_begin[static_cast<std::size_t>(d) + 1]; ++e) {
      const EdgeDescriptor& edge = graph.edges[static_cast<std::size_t>(e)];
      EdgeBatch<T>& bucket = in.edges[static_cast<std::size_t>(edge.edge_type)];
      edge_slot[static_cast<std::size_t>(e)] = {static_cast<int>(edge.edge_type), bucket.count};
      if (!bucket.segments.empty() && bucket.segments.back().q_row == d &&
          bucket.segments.back().k_end == bucket.count)
        bucket.segments.back().k_end = bucket.count + 1;
      else
        bucket.segments.push_back({d, bucket.count, bucket.count + 1});
      bucket.source_rows.push_back(edge.source);
      ++bucket.count;
    }
  }
  for (int t = 0; t < kNumNodeTypes; ++t) {
    EdgeBatch<T>& bucket = in.edges[static_cast<std::size_t>(t)];
    bucket.gamma = nn::Tensor<T>(bucket.count, kPoseDim);
  }
  {
    std::array<int, kNumNodeTypes> cursor{};
    for (const EdgeDescriptor& edge : graph.edges) {
      EdgeBatch<T>& bucket = in.edges[static_cast<std::size_t>(edge.edge_type)];
      const int i = cursor[static_cast<std::size_t>(edge.edge_type)]++;
      bucket.gamma.at(i, 0) = static_cast<T>(edge.rel_pose.dx * cfg.pos_scale);
      bucket.gamma.at(i, 1) = static_cast<T>(edge.rel_pose.dy * cfg.pos_scale);
      bucket.gamma.at(i, 2) = static_cast<T>(std::cos(edge.rel_pose.dtheta));
      bucket.gamma.at(i, 3) = static_cast<T>(std::sin(edge.rel_pose.dtheta));
    }
  }

  std::array<int, kNumNodeTypes> bucket_offset{};
  {
    int off = 0;
    for (int t = 0; t < kNumNodeTypes; ++t) {
      bucket_offset[static_cast<std::size_t>(t)] = off;
      off += in.edges[static_cast<std::size_t>(t)].count;
    }
  }

  in.target_rows = graph.target_nodes;
  const int n_targets = static_cast<int>(in.target_rows.size());
  in.target_future = nn::Tensor<T>(n_targets * cfg.future_steps, 2);
  in.target_future_valid.assign(static_cast<std::size_t>(n_targets) * cfg.future_steps, 0);
  for (int t = 0; t < n_targets; ++t) {
    const int row = in.target_rows[static_cast<std::size_t>(t)];
    const NodeDescriptor& node = graph.nodes[static_cast<std::size_t>(row)];
    in.target_ids.push_back(node.ref_id);
    in.target_frames.push_back(node.frame);

    in.target_edge_counts.push_back(graph.in_degree(row));
    for (int e = graph.in_begin[static_cast<std::size_t>(row)];
         e < graph.in_begin[static_cast<std::size_t>(row) + 1]; ++e) {
      const auto [type, pos] = edge_slot[static_cast<std::size_t>(e)];
      in.target_edge_rows.push_back(bucket_offset[static_cast<std::size_t>(type)] + pos);
    }

    const FutureTrajectory* future = scene.future_of(node.ref_id);
    if (future == nullptr || static_cast<int>(future->points.size()) != cfg.future_steps)
      throw std::invalid_argument("inputs: target lacks a ground-truth future");
    const std::vector<Vec2> local = to_local(future->points, node.frame);
    int valid = 0;
    for (int s = 0; s < cfg.future_steps; ++s) {
      if (!future->mask[static_cast<std::size_t>(s)]) continue;
      const int r = t * cfg.future_steps + s;
      in.target_future.at(r, 0) = static_cast<T>(local[static_cast<std::size_t>(s)].x);
      in.target_future.at(r, 1) = static_cast<T>(local[static_cast<std::size_t>(s)].y);
      in.target_future_valid[static_cast<std::size_t>(r)] = 1;
      ++valid;
    }
    if (valid == 0)
      throw std::invalid_argument("inputs: target future is fully masked");
    in.target_valid_counts.push_back(valid);
  }
  return in;
}

}  // namespace coopred
