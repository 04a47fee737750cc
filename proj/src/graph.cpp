#include "coopred/graph.hpp"

#include <algorithm>
#include <stdexcept>

#include "coopred/preprocess.hpp"

namespace coopred {

const char* to_string(NodeType t) {
  switch (t) {
    case NodeType::kObjAvVehicle: return "obj_av_vehicle";
    case NodeType::kObjAvPedestrian: return "obj_av_pedestrian";
    case NodeType::kObjAvBicycle: return "obj_av_bicycle";
    case NodeType::kObjInfraVehicle: return "obj_infra_vehicle";
    case NodeType::kObjInfraPedestrian: return "obj_infra_pedestrian";
    case NodeType::kObjInfraBicycle: return "obj_infra_bicycle";
    case NodeType::kFuturePlan: return "future_plan";
    case NodeType::kFutureInfraPred: return "future_infra_pred";
    case NodeType::kMapLane: return "map_lane";
    case NodeType::kMapCrosswalk: return "map_crosswalk";
    case NodeType::kMapStopline: return "map_stopline";
    case NodeType::kSignal: return "signal";
  }
  return "unknown";
}

NodeType object_node_type(View view, ObjectType type) {
  const int base = view == View::kAv ? 0 : 3;
  switch (type) {
    case ObjectType::kVehicle: return static_cast<NodeType>(base + 0);
    case ObjectType::kPedestrian: return static_cast<NodeType>(base + 1);
    case ObjectType::kBicycle: return static_cast<NodeType>(base + 2);
  }
  return NodeType::kObjAvVehicle;
}

NodeType map_node_type(MapKind kind) {
  switch (kind) {
    case MapKind::kLaneLine:
    case MapKind::kRoadLine: return NodeType::kMapLane;
    case MapKind::kCrosswalk: return NodeType::kMapCrosswalk;
    case MapKind::kStopLine: return NodeType::kMapStopline;
  }
  return NodeType::kMapLane;
}

double point_to_polyline(const Vec2& p, const std::vector<Vec2>& polyline, int valid_points) {
  const int n = std::min<int>(valid_points, static_cast<int>(polyline.size()));
  if (n <= 0) return (p - Vec2{}).norm();
  if (n == 1) return (p - polyline[0]).norm();
  double best = (p - polyline[0]).norm();
  for (int i = 1; i < n; ++i)
    best = std::min(best, point_segment_distance(p, polyline[static_cast<std::size_t>(i - 1)],
                                                 polyline[static_cast<std::size_t>(i)]));
  return best;
}

double node_distance(const NodeDescriptor& a, const NodeDescriptor& b) {
  const bool a_map = is_map_node(a.type), b_map = is_map_node(b.type);
  if (!a_map && !b_map) return (a.anchor - b.anchor).norm();
  if (a_map && !b_map) return point_to_polyline(b.anchor, a.points, a.valid_points);
  if (!a_map && b_map) return point_to_polyline(a.anchor, b.points, b.valid_points);
  double best = point_to_polyline(a.points[0], b.points, b.valid_points);
  for (int i = 0; i < a.valid_points; ++i)
    best = std::min(best, point_to_polyline(a.points[static_cast<std::size_t>(i)], b.points,
                                            b.valid_points));
  for (int i = 0; i < b.valid_points; ++i)
    best = std::min(best, point_to_polyline(b.points[static_cast<std::size_t>(i)], a.points,
                                            a.valid_points));
  return best;
}

std::vector<int> select_neighbors(const NodeDescriptor& dest,
                                  const std::vector<NodeDescriptor>& nodes,
                                  const std::vector<int>& candidates, int max_edges) {
  if (max_edges < 0) max_edges = 0;
  std::vector<std::pair<double, int>> ranked;
  ranked.reserve(candidates.size());
  for (int id : candidates) {
    if (id == dest.node_id) continue;
    // micrometer quantization keeps symmetric-scene ties stable under the
    // fp noise of a rigid scene motion; ties fall through to the node id
    const double dist = node_distance(nodes[static_cast<std::size_t>(id)], dest);
    ranked.emplace_back(std::round(dist * 1e6), id);
  }
  std::sort(ranked.begin(), ranked.end());
  if (static_cast<int>(ranked.size()) > max_edges) ranked.resize(static_cast<std::size_t>(max_edges));
  std::vector<int> out;
  out.reserve(ranked.size());
  for (const auto& [dist, id] : ranked) out.push_back(id);
  return out;
}

namespace {

struct Builder {
  const Scene& scene;
  const GraphConfig& cfg;
  std::vector<NodeDescriptor> nodes;

  explicit Builder(const Scene& s, const GraphConfig& c) : scene(s), cfg(c) {}

  const Track* track_of(const std::string& id, View preferred) const {
    const Track* t = preferred == View::kAv ? scene.av_track(id) : scene.infra_track(id);
    if (t == nullptr)
      t = preferred == View::kAv ? scene.infra_track(id) : scene.av_track(id);
    return t;
  }

  void add_object_nodes(const std::vector<Track>& tracks) {
    for (std::size_t i = 0; i < tracks.size(); ++i) {
      const Track& t = tracks[i];
      const int last = t.last_valid_index();
      if (last < 0) continue;
      NodeDescriptor n;
      n.type = object_node_type(t.view, t.object_type);
      n.frame = compute_reference_frame(t);
      n.anchor = {t.states[static_cast<std::size_t>(last)].x,
                  t.states[static_cast<std::size_t>(last)].y};
      n.ref_id = t.object_id;
      n.view = t.view;
      n.track_index = static_cast<int>(i);
      nodes.push_back(std::move(n));
    }
  }

  void add_future_nodes() {
    if (cfg.use_plan) {
      const Track* av = track_of(scene.av_id, cfg.use_av ? View::kAv : View::kInfrastructure);
      if (av != nullptr && av->last_valid_index() >= 0) {
        NodeDescriptor n;
        n.type = NodeType::kFuturePlan;
        n.frame = compute_reference_frame(*av);
        n.anchor = {n.frame.x_ref, n.frame.y_ref};
        n.ref_id = scene.av_id;
        nodes.push_back(std::move(n));
      }
    }
    if (cfg.use_infra_pred) {
      for (std::size_t i = 0; i < scene.infra_predictions.size(); ++i) {
        const InfraPrediction& p = scene.infra_predictions[i];
        const Track* t = track_of(p.object_id, View::kInfrastructure);
        if (t == nullptr || t->last_valid_index() < 0) continue;
        NodeDescriptor n;
        n.type = NodeType::kFutureInfraPred;
        n.frame = compute_reference_frame(*t);
        n.anchor = {n.frame.x_ref, n.frame.y_ref};
        n.ref_id = p.object_id;
        n.pred_index = static_cast<int>(i);
        nodes.push_back(std::move(n));
      }
    }
  }

  void add_map_nodes(const Vec2& center) {
    const int seg = cfg.segment_points;
    for (const MapElement& e : scene.map) {
      if (e.geometry.size() < 2) continue;
      if (point_to_polyline(center, e.geometry, static_cast<int>(e.geometry.size())) >
          cfg.map_radius_m)
        continue;
      const int total = static_cast<int>(e.geometry.size());
      const int stride = seg - 1;
      const int segments = (total - 1 + stride - 1) / stride;
      for (int s = 0; s < segments; ++s) {
        const int begin = s * stride;
        const int end = std::min(begin + seg, total);
        NodeDescriptor n;
        n.type = map_node_type(e.kind);
        n.ref_id = e.element_id;
        n.map_kind = e.kind;
        n.segment_index = s;
        n.valid_points = end - begin;
        n.points.assign(e.geometry.begin() + begin, e.geometry.begin() + end);
        while (static_cast<int>(n.points.size()) < seg) n.points.push_back(n.points.back());
        MapElement piece;
        piece.kind = e.kind;
        piece.geometry.assign(n.points.begin(), n.points.begin() + n.valid_points);
        n.frame = compute_reference_frame(piece);
        n.anchor = {n.frame.x_ref, n.frame.y_ref};
        nodes.push_back(std::move(n));
      }
    }
  }

  void add_signal_nodes(double theta) {
    // a point signal has no heading of its own; orient its frame with the
    // AV so edge poses stay equivariant under rigid scene motion
    for (const SignalRecord& s : scene.signals) {
      if (s.phase_sequence.empty()) continue;
      NodeDescriptor n;
      n.type = NodeType::kSignal;
      n.frame = {s.position.x, s.position.y, theta};
      n.anchor = s.position;
      n.ref_id = s.signal_id;
      nodes.push_back(std::move(n));
    }
  }
};

}  // namespace

HeteroGraph build_graph(const Scene& scene, const GraphConfig& config) {
  if (config.max_in_edges < 1) throw std::invalid_argument("graph: max_in_edges must be >= 1");
  if (config.segment_points < 2) throw std::invalid_argument("graph: segment_points must be >= 2");
  if (config.use_plan && scene.av_planning.empty())
    throw std::invalid_argument("graph: planning node enabled but scene has no planning");
  if (config.use_infra_pred && scene.infra_predictions.empty())
    throw std::invalid_argument(
        "graph: prediction nodes enabled but scene has no infra predictions");

  Builder b(scene, config);
  if (config.use_av) b.add_object_nodes(scene.av_tracks);
  if (config.use_infra_nodes) b.add_object_nodes(scene.infra_tracks);
  b.add_future_nodes();

  const Track* av_ref =
      b.track_of(scene.av_id, config.use_av ? View::kAv : View::kInfrastructure);
  if (av_ref == nullptr || av_ref->last_valid_index() < 0)
    throw std::invalid_argument("graph: scene has no usable AV track");
  const int av_last = av_ref->last_valid_index();
  const ObjectState& av_state = av_ref->states[static_cast<std::size_t>(av_last)];
  b.add_map_nodes({av_state.x, av_state.y});
  b.add_signal_nodes(wrap_angle(av_state.heading));

  HeteroGraph g;
  g.nodes = std::move(b.nodes);
  std::stable_sort(g.nodes.begin(), g.nodes.end(),
                   [](const NodeDescriptor& x, const NodeDescriptor& y) { return x.type < y.type; });
  for (std::size_t i = 0; i < g.nodes.size(); ++i) g.nodes[i].node_id = static_cast<int>(i);

  bool any_object = false;
  for (const NodeDescriptor& n : g.nodes) any_object = any_object || is_object_node(n.type);
  if (!any_object) throw std::invalid_argument("graph: scene yields no object nodes");

  {
    int cursor = 0;
    for (int t = 0; t < kNumNodeTypes; ++t) {
      g.type_begin[static_cast<std::size_t>(t)] = cursor;
      while (cursor < static_cast<int>(g.nodes.size()) &&
             static_cast<int>(g.nodes[static_cast<std::size_t>(cursor)].type) == t)
        ++cursor;
    }
    g.type_begin[kNumNodeTypes] = cursor;
  }

  std::vector<int> object_ids, future_ids, grounded_ids;  // grounded = non-future
  for (const NodeDescriptor& n : g.nodes) {
    if (is_object_node(n.type)) object_ids.push_back(n.node_id);
    if (is_future_node(n.type))
      future_ids.push_back(n.node_id);
    else
      grounded_ids.push_back(n.node_id);
  }
  std::vector<int> map_ids;
  for (int id = g.type_begin[8]; id < g.type_begin[11]; ++id) map_ids.push_back(id);

  g.in_begin.assign(g.nodes.size() + 1, 0);
  g.edges.clear();
  for (const NodeDescriptor& dest : g.nodes) {
    std::vector<int> sources;
    if (is_future_node(dest.type)) {
      sources = select_neighbors(dest, g.nodes, map_ids, config.max_in_edges);
    } else if (is_object_node(dest.type)) {
      std::vector<int> mandated = future_ids;
      if (dest.view == View::kAv)
        for (int id : object_ids) {
          const NodeDescriptor& src = g.nodes[static_cast<std::size_t>(id)];
          if (src.view == View::kInfrastructure && src.ref_id == dest.ref_id)
            mandated.push_back(id);
        }
      std::vector<int> pool;
      for (int id : grounded_ids) {
        if (id == dest.node_id) continue;
        if (std::find(mandated.begin(), mandated.end(), id) != mandated.end()) continue;
        pool.push_back(id);
      }
      const int budget = std::max(0, config.max_in_edges - static_cast<int>(mandated.size()));
      sources = std::move(mandated);
      for (int id : select_neighbors(dest, g.nodes, pool, budget)) sources.push_back(id);
    } else {
      sources = select_neighbors(dest, g.nodes, grounded_ids, config.max_in_edges);
    }

    std::sort(sources.begin(), sources.end(), [&g](int a, int b) {
      const NodeType ta = g.nodes[static_cast<std::size_t>(a)].type;
      const NodeType tb = g.nodes[static_cast<std::size_t>(b)].type;
      return ta != tb ? ta < tb : a < b;
    });
    for (int src : sources) {
      EdgeDescriptor e;
      e.source = src;
      e.dest = dest.node_id;
      e.edge_type = g.nodes[static_cast<std::size_t>(src)].type;
      e.rel_pose = relative_transform(g.nodes[static_cast<std::size_t>(src)].frame, dest.frame);
      g.edges.push_back(e);
    }
    g.in_begin[static_cast<std::size_t>(dest.node_id) + 1] = static_cast<int>(g.edges.size());
  }

  const View primary = config.use_av ? View::kAv : View::kInfrastructure;
  auto find_object_node = [&g, primary](const std::string& id) {
    for (const NodeDescriptor& n : g.nodes)
      if (is_object_node(n.type) && n.view == primary && n.ref_id == id) return n.node_id;
    return -1;
  };
  g.av_node = find_object_node(scene.av_id);
  for (const std::string& id : scene.target_ids) {
    const int node = find_object_node(id);
    if (node >= 0) g.target_nodes.push_back(node);
  }
  return g;
}

}  // namespace coopred
