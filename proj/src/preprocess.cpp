#include "coopred/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace coopred {
namespace {

/// Indices kept by backward-counted downsampling, in ascending order.
std::vector<std::size_t> kept_indices(std::size_t length, int factor) {
  std::vector<std::size_t> idx;
  for (std::size_t pos = length; pos-- > 0;) {
    idx.push_back(pos);
    if (pos < static_cast<std::size_t>(factor)) break;
    pos -= static_cast<std::size_t>(factor) - 1;
  }
  std::reverse(idx.begin(), idx.end());
  return idx;
}

}  // namespace

Track downsample(const Track& track, int factor) {
  if (factor < 1) throw std::invalid_argument("downsample: factor must be >= 1");
  if (factor == 1 || track.states.empty()) return track;
  Track out = track;
  out.states.clear();
  out.mask.clear();
  out.detection_scores.clear();
  for (std::size_t i : kept_indices(track.states.size(), factor)) {
    out.states.push_back(track.states[i]);
    out.mask.push_back(track.mask[i]);
    out.detection_scores.push_back(track.detection_scores[i]);
  }
  return out;
}

FutureTrajectory downsample_future(const FutureTrajectory& future, int factor) {
  if (factor < 1) throw std::invalid_argument("downsample: factor must be >= 1");
  if (factor == 1 || future.points.empty()) return future;
  FutureTrajectory out;
  out.object_id = future.object_id;
  for (std::size_t i : kept_indices(future.points.size(), factor)) {
    out.points.push_back(future.points[i]);
    out.mask.push_back(future.mask[i]);
  }
  return out;
}

std::vector<SignalPhase> downsample_phases(const std::vector<SignalPhase>& phases, int factor) {
  if (factor < 1) throw std::invalid_argument("downsample: factor must be >= 1");
  if (factor == 1 || phases.empty()) return phases;
  std::vector<SignalPhase> out;
  for (std::size_t i : kept_indices(phases.size(), factor)) out.push_back(phases[i]);
  return out;
}

std::vector<Track> stitch_histories(const std::vector<Track>& av_tracks,
                                    const std::vector<Track>& infra_tracks,
                                    const std::map<std::string, std::string>& association) {
  std::unordered_map<std::string, const Track*> infra_by_id;
  for (const Track& t : infra_tracks) infra_by_id[t.object_id] = &t;
  std::unordered_map<std::string, const Track*> av_by_id;
  for (const Track& t : av_tracks) av_by_id[t.object_id] = &t;
  for (const auto& [av_id, infra_id] : association) {
    if (!av_by_id.count(av_id))
      throw std::invalid_argument("stitch: association names unknown AV track " + av_id);
    if (!infra_by_id.count(infra_id))
      throw std::invalid_argument("stitch: association names unknown infra track " + infra_id);
  }

  std::vector<Track> out;
  out.reserve(av_tracks.size());
  for (const Track& av : av_tracks) {
    Track merged = av;
    const auto assoc = association.find(av.object_id);
    if (assoc != association.end()) {
      const Track& infra = *infra_by_id.at(assoc->second);
      const std::size_t frames = std::min(av.states.size(), infra.states.size());
      for (std::size_t t = 0; t < frames; ++t) {
        const bool av_has = av.mask[t] != 0;
        const bool infra_has = infra.mask[t] != 0;
        if (!infra_has) continue;
        if (!av_has || infra.detection_scores[t] > av.detection_scores[t]) {
          merged.states[t] = infra.states[t];
          merged.mask[t] = 1;
          merged.detection_scores[t] = infra.detection_scores[t];
        }
      }
    }
    out.push_back(std::move(merged));
  }
  return out;
}

std::vector<Vec2> synthesize_planning(const std::vector<ObjectState>& recent_states,
                                      const std::vector<Vec2>& future_gt, double dt) {
  if (recent_states.empty()) throw std::invalid_argument("planning: no current state");
  if (future_gt.size() < 2) throw std::invalid_argument("planning: need at least 2 future points");
  if (dt <= 0.0) throw std::invalid_argument("planning: dt must be positive");

  const ObjectState& cur = recent_states.back();
  const double T = static_cast<double>(future_gt.size()) * dt;

  auto vel_of = [](const ObjectState& s) {
    return Vec2{s.speed * std::cos(s.heading), s.speed * std::sin(s.heading)};
  };
  const Vec2 p0{cur.x, cur.y};
  const Vec2 v0 = vel_of(cur);
  Vec2 a0{0.0, 0.0};
  if (recent_states.size() >= 2) {
    const Vec2 vp = vel_of(recent_states[recent_states.size() - 2]);
    a0 = (v0 - vp) * (1.0 / dt);
  }

  const std::size_t n = future_gt.size();
  const Vec2 p1 = future_gt[n - 1];
  const Vec2 v1 = (future_gt[n - 1] - future_gt[n - 2]) * (1.0 / dt);
  Vec2 a1{0.0, 0.0};
  if (n >= 3)
    a1 = (future_gt[n - 1] - future_gt[n - 2] * 2.0 + future_gt[n - 3]) * (1.0 / (dt * dt));

  // quintic coefficients per axis from the six boundary conditions
  auto solve_axis = [T](double p0a, double v0a, double a0a, double p1a, double v1a, double a1a) {
    std::array<double, 6> c{};
    c[0] = p0a;
    c[1] = v0a;
    c[2] = 0.5 * a0a;
    const double dp = (p1a - p0a - v0a * T - 0.5 * a0a * T * T) / (T * T * T);
    const double dv = (v1a - v0a - a0a * T) / (T * T);
    const double da = (a1a - a0a) / T;
    const double u = (20.0 * dp - 8.0 * dv + da) * 0.5;
    const double w4 = (-30.0 * dp + 14.0 * dv - 2.0 * da) * 0.5;
    const double w5 = (12.0 * dp - 6.0 * dv + da) * 0.5;
    c[3] = u;
    c[4] = w4 / T;
    c[5] = w5 / (T * T);
    return c;
  };
  const auto cx = solve_axis(p0.x, v0.x, a0.x, p1.x, v1.x, a1.x);
  const auto cy = solve_axis(p0.y, v0.y, a0.y, p1.y, v1.y, a1.y);

  auto eval = [](const std::array<double, 6>& c, double t) {
    double acc = 0.0;
    for (int k = 5; k >= 0; --k) acc = acc * t + c[static_cast<std::size_t>(k)];
    return acc;
  };

  std::vector<Vec2> plan;
  plan.reserve(n);
  for (std::size_t i = 1; i <= n; ++i) {
    const double t = static_cast<double>(i) * dt;
    plan.push_back({eval(cx, t), eval(cy, t)});
  }
  return plan;
}

ReferenceFrame compute_reference_frame(const Track& track) {
  const int last = track.last_valid_index();
  if (last < 0) throw std::invalid_argument("reference frame: track has no valid frame");
  const ObjectState& s = track.states[static_cast<std::size_t>(last)];
  return {s.x, s.y, wrap_angle(s.heading)};
}

ReferenceFrame compute_reference_frame(const MapElement& element) {
  if (element.geometry.size() < 2)
    throw std::invalid_argument("reference frame: map element needs >= 2 points");
  // closed polygons repeat the first point; count each vertex once
  std::size_t distinct = element.geometry.size();
  const Vec2& first = element.geometry.front();
  const Vec2& last = element.geometry.back();
  if (distinct > 2 && first.x == last.x && first.y == last.y) --distinct;
  Vec2 centroid{0.0, 0.0};
  for (std::size_t i = 0; i < distinct; ++i) centroid = centroid + element.geometry[i];
  centroid = centroid * (1.0 / static_cast<double>(distinct));
  double best_len = -1.0;
  Vec2 best_dir{1.0, 0.0};
  for (std::size_t i = 1; i < element.geometry.size(); ++i) {
    const Vec2 d = element.geometry[i] - element.geometry[i - 1];
    const double len = d.norm();
    // a relative margin keeps exact-tie winners stable under the fp noise
    // a rigid scene motion introduces, so frames stay equivariant
    if (len > best_len + 1e-6 * std::max(1.0, best_len)) {
      best_len = len;
      best_dir = d;
    }
  }
  return {centroid.x, centroid.y, std::atan2(best_dir.y, best_dir.x)};
}

RelativePose relative_transform(const ReferenceFrame& source, const ReferenceFrame& dest) {
  const Vec2 origin = global_to_local({source.x_ref, source.y_ref}, dest);
  return {origin.x, origin.y, wrap_angle(source.theta_ref - dest.theta_ref)};
}

RelativePose inverse(const RelativePose& pose) {
  const double c = std::cos(pose.dtheta), s = std::sin(pose.dtheta);
  return {-(c * pose.dx + s * pose.dy), -(-s * pose.dx + c * pose.dy), wrap_angle(-pose.dtheta)};
}

RelativePose compose(const RelativePose& a_to_b, const RelativePose& b_to_c) {
  const double c = std::cos(b_to_c.dtheta), s = std::sin(b_to_c.dtheta);
  return {b_to_c.dx + c * a_to_b.dx - s * a_to_b.dy,
          b_to_c.dy + s * a_to_b.dx + c * a_to_b.dy,
          wrap_angle(a_to_b.dtheta + b_to_c.dtheta)};
}

Track to_local(const Track& track, const ReferenceFrame& frame) {
  Track out = track;
  for (std::size_t t = 0; t < out.states.size(); ++t) {
    if (!out.mask[t]) {
      out.states[t] = ObjectState{};  // keep placeholder exactly zero
      continue;
    }
    const Vec2 p = global_to_local({track.states[t].x, track.states[t].y}, frame);
    out.states[t].x = p.x;
    out.states[t].y = p.y;
    out.states[t].heading = wrap_angle(track.states[t].heading - frame.theta_ref);
  }
  return out;
}

std::vector<Vec2> to_local(const std::vector<Vec2>& points, const ReferenceFrame& frame) {
  std::vector<Vec2> out;
  out.reserve(points.size());
  for (const Vec2& p : points) out.push_back(global_to_local(p, frame));
  return out;
}

void preprocess_scene(Scene& scene, int downsample_factor, bool stitch) {
  if (downsample_factor < 1)
    throw std::invalid_argument("preprocess: downsample factor must be >= 1");

  for (Track& t : scene.av_tracks) t = downsample(t, downsample_factor);
  for (Track& t : scene.infra_tracks) t = downsample(t, downsample_factor);
  for (FutureTrajectory& f : scene.future_gt) f = downsample_future(f, downsample_factor);
  for (SignalRecord& s : scene.signals)
    s.phase_sequence = downsample_phases(s.phase_sequence, downsample_factor);

  if (!scene.av_tracks.empty())
    scene.history_horizon = static_cast<int>(scene.av_tracks.front().states.size());
  if (!scene.future_gt.empty())
    scene.future_horizon = static_cast<int>(scene.future_gt.front().points.size());
  scene.frequency_hz /= downsample_factor;

  if (stitch) {
    std::map<std::string, std::string> association;
    for (const Track& av : scene.av_tracks)
      for (const Track& infra : scene.infra_tracks)
        if (infra.object_id == av.object_id) {
          association[av.object_id] = av.object_id;
          break;
        }
    scene.av_tracks = stitch_histories(scene.av_tracks, scene.infra_tracks, association);
  }

  const Track* av = scene.av_track(scene.av_id);
  const FutureTrajectory* av_future = scene.future_of(scene.av_id);
  scene.av_planning.clear();
  if (av != nullptr && av_future != nullptr && av_future->points.size() >= 2) {
    std::vector<ObjectState> recent;
    for (std::size_t t = 0; t < av->states.size(); ++t)
      if (av->mask[t]) recent.push_back(av->states[t]);
    if (recent.size() > 3) recent.erase(recent.begin(), recent.end() - 3);
    if (!recent.empty())
      scene.av_planning =
          synthesize_planning(recent, av_future->points, 1.0 / scene.frequency_hz);
  }
}

}  // namespace coopred
