#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "coopred/geom.hpp"
#include "coopred/scene.hpp"

namespace coopred {

/// Node taxonomy of the heterogeneous scene graph. Object histories are
/// typed by view and agent class, futures by their producer, map segments
/// by element kind. Edge types are inherited from the source node.
enum class NodeType : uint8_t {
  kObjAvVehicle = 0,
  kObjAvPedestrian = 1,
  kObjAvBicycle = 2,
  kObjInfraVehicle = 3,
  kObjInfraPedestrian = 4,
  kObjInfraBicycle = 5,
  kFuturePlan = 6,
  kFutureInfraPred = 7,
  kMapLane = 8,
  kMapCrosswalk = 9,
  kMapStopline = 10,
  kSignal = 11,
};
inline constexpr int kNumNodeTypes = 12;

const char* to_string(NodeType t);

constexpr bool is_object_node(NodeType t) { return static_cast<int>(t) <= 5; }
constexpr bool is_future_node(NodeType t) {
  return t == NodeType::kFuturePlan || t == NodeType::kFutureInfraPred;
}
constexpr bool is_map_node(NodeType t) {
  const int v = static_cast<int>(t);
  return v >= 8 && v <= 10;
}
constexpr bool is_signal_node(NodeType t) { return t == NodeType::kSignal; }

NodeType object_node_type(View view, ObjectType type);
NodeType map_node_type(MapKind kind);

struct NodeDescriptor {
  int node_id = -1;
  NodeType type = NodeType::kObjAvVehicle;
  ReferenceFrame frame;
  Vec2 anchor;  // distance anchor: position at the last history step, or signal position

  std::string ref_id;             // object / element / signal id
  View view = View::kAv;          // object nodes
  int track_index = -1;           // object nodes: index into the view's track list
  int pred_index = -1;            // future_infra_pred: index into infra_predictions
  MapKind map_kind = MapKind::kLaneLine;
  std::vector<Vec2> points;       // map nodes: segment geometry, padded to segment_points
  int valid_points = 0;           // map nodes: point count before repeat-last padding
  int segment_index = 0;          // map nodes: position of the segment within its element
};

struct EdgeDescriptor {
  int source = -1;
  int dest = -1;
  NodeType edge_type = NodeType::kObjAvVehicle;  // always the source node type
  RelativePose rel_pose;                         // source frame expressed in dest frame
};

/// Table II style ablation switches plus structural limits.
struct GraphConfig {
  bool use_av = true;           // vehicle-side object history nodes
  bool use_infra_nodes = true;  // raw infrastructure history nodes
  bool use_plan = true;         // planned AV future node
  bool use_infra_pred = true;   // infrastructure-predicted future nodes
  int max_in_edges = 32;
  double map_radius_m = 250.0;
  int segment_points = 21;
};

struct HeteroGraph {
  std::vector<NodeDescriptor> nodes;  // sorted by type, stable within type
  std::vector<EdgeDescriptor> edges;  // grouped by dest, then (edge_type, source)
  std::array<int, kNumNodeTypes + 1> type_begin{};  // node index range per type
  std::vector<int> in_begin;          // per-dest edge range, size nodes.size() + 1
  std::vector<int> target_nodes;      // object nodes to decode, aligned with target ids
  int av_node = -1;                   // AV history node in the primary view, -1 if absent

  int in_degree(int node) const { return in_begin[node + 1] - in_begin[node]; }
};

/// Distance used for neighbor selection: object/future/signal nodes measure
/// from their anchors; map nodes measure the shortest distance to their
/// polyline (min over both directions when both are maps).
double node_distance(const NodeDescriptor& a, const NodeDescriptor& b);

double point_to_polyline(const Vec2& p, const std::vector<Vec2>& polyline, int valid_points);

/// The max_edges nearest candidates by node_distance to `dest`, ties broken
/// by ascending node_id. Candidates equal to dest itself are skipped.
std::vector<int> select_neighbors(const NodeDescriptor& dest,
                                  const std::vector<NodeDescriptor>& nodes,
                                  const std::vector<int>& candidates, int max_edges);

/// Builds the typed scene graph from a preprocessed scene.
///
/// Nodes: enabled object histories with at least one valid frame, the plan
/// and infra-prediction futures, every map element within map_radius_m of
/// the AV split into segment_points-long segments (one shared point between
/// consecutive segments, repeat-last padding), and all signals.
///
/// Edges: every object node takes the infra-view node of the same object
/// and every future node as mandated in-edges, then fills the remaining
/// budget with its nearest other nodes; future nodes take in-edges from map
/// segments only; map and signal nodes take their nearest non-future nodes.
/// In-degree never exceeds max_in_edges.
///
/// Throws std::invalid_argument when no object node can be built, or when a
/// future flag is enabled without the matching scene payload.
HeteroGraph build_graph(const Scene& scene, const GraphConfig& config);

}  // namespace coopred
