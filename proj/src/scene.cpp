#include "coopred/scene.hpp"

#include <cmath>
#include <sstream>

namespace coopred {

const char* to_string(ObjectType t) {
  switch (t) {
    case ObjectType::kVehicle: return "vehicle";
    case ObjectType::kBicycle: return "bicycle";
    case ObjectType::kPedestrian: return "pedestrian";
  }
  return "vehicle";
}

const char* to_string(View v) {
  return v == View::kAv ? "av" : "infrastructure";
}

const char* to_string(MapKind k) {
  switch (k) {
    case MapKind::kLaneLine: return "lane_line";
    case MapKind::kRoadLine: return "road_line";
    case MapKind::kCrosswalk: return "crosswalk";
    case MapKind::kStopLine: return "stop_line";
  }
  return "lane_line";
}

const char* to_string(SignalPhase p) {
  switch (p) {
    case SignalPhase::kRed: return "red";
    case SignalPhase::kYellow: return "yellow";
    case SignalPhase::kGreen: return "green";
    case SignalPhase::kUnknown: return "unknown";
  }
  return "unknown";
}

namespace {

constexpr double kPi = 3.14159265358979323846;

bool finite(double v) { return std::isfinite(v); }

void check_track(const Track& t, const Scene& scene, const char* side,
                 std::vector<std::string>& out) {
  std::ostringstream who;
  who << side << "_tracks[" << t.object_id << "]";
  const std::string w = who.str();
  const std::size_t n = t.states.size();
  if (t.mask.size() != n || t.detection_scores.size() != n) {
    out.push_back(w + ": states/mask/detection_scores lengths differ (" +
                  std::to_string(n) + "/" + std::to_string(t.mask.size()) + "/" +
                  std::to_string(t.detection_scores.size()) + ")");
    return;
  }
  if (static_cast<int>(n) != scene.history_horizon)
    out.push_back(w + ": length " + std::to_string(n) + " != history_horizon " +
                  std::to_string(scene.history_horizon));
  const double dt = 1.0 / scene.frequency_hz;
  for (std::size_t i = 0; i < n; ++i) {
    const ObjectState& s = t.states[i];
    if (!finite(s.x) || !finite(s.y) || !finite(s.heading) || !finite(s.speed) ||
        !finite(s.timestamp)) {
      out.push_back(w + ".states[" + std::to_string(i) + "]: non-finite value");
      continue;
    }
    if (t.mask[i] == 0) {
      if (s.x != 0.0 || s.y != 0.0 || s.heading != 0.0 || s.speed != 0.0 || s.timestamp != 0.0)
        out.push_back(w + ".states[" + std::to_string(i) + "]: masked frame is not all-zero");
      continue;
    }
    if (!(s.heading > -kPi && s.heading <= kPi))
      out.push_back(w + ".states[" + std::to_string(i) + "].heading out of range (-pi, pi]: " +
                    std::to_string(s.heading));
    if (s.timestamp < 0.0)
      out.push_back(w + ".states[" + std::to_string(i) + "].timestamp negative");
    if (std::fabs(s.timestamp - static_cast<double>(i) * dt) > 1e-6)
      out.push_back(w + ".states[" + std::to_string(i) + "].timestamp " +
                    std::to_string(s.timestamp) + " off the frame grid");
    if (t.detection_scores[i] < 0.0 || t.detection_scores[i] > 1.0)
      out.push_back(w + ".detection_scores[" + std::to_string(i) + "] outside [0,1]");
  }
}

}  // namespace

std::vector<std::string> validate_scene(const Scene& scene) {
  std::vector<std::string> out;
  for (const Track& t : scene.av_tracks) {
    if (t.view != View::kAv) out.push_back("av_tracks[" + t.object_id + "]: wrong view tag");
    check_track(t, scene, "av", out);
  }
  for (const Track& t : scene.infra_tracks) {
    if (t.view != View::kInfrastructure)
      out.push_back("infra_tracks[" + t.object_id + "]: wrong view tag");
    check_track(t, scene, "infra", out);
  }
  if (scene.av_track(scene.av_id) == nullptr)
    out.push_back("av_id '" + scene.av_id + "' has no track in av_tracks");
  for (const MapElement& m : scene.map) {
    if (m.geometry.size() < 2)
      out.push_back("map[" + m.element_id + "]: fewer than 2 points");
    for (std::size_t i = 0; i < m.geometry.size(); ++i)
      if (!finite(m.geometry[i].x) || !finite(m.geometry[i].y))
        out.push_back("map[" + m.element_id + "].geometry[" + std::to_string(i) +
                      "]: non-finite");
  }
  for (const SignalRecord& s : scene.signals)
    if (static_cast<int>(s.phase_sequence.size()) != scene.history_horizon)
      out.push_back("signals[" + s.signal_id + "]: phase_sequence length " +
                    std::to_string(s.phase_sequence.size()) + " != history_horizon");
  for (const std::string& id : scene.target_ids)
    if (scene.future_of(id) == nullptr)
      out.push_back("target '" + id + "' has no future_gt entry");
  for (const FutureTrajectory& f : scene.future_gt) {
    if (f.points.size() != f.mask.size())
      out.push_back("future_gt[" + f.object_id + "]: points/mask lengths differ");
    if (static_cast<int>(f.points.size()) != scene.future_horizon)
      out.push_back("future_gt[" + f.object_id + "]: length != future_horizon");
    for (std::size_t i = 0; i < f.points.size(); ++i)
      if (!finite(f.points[i].x) || !finite(f.points[i].y))
        out.push_back("future_gt[" + f.object_id + "].points[" + std::to_string(i) +
                      "]: non-finite");
  }
  if (!scene.av_planning.empty() &&
      static_cast<int>(scene.av_planning.size()) != scene.future_horizon)
    out.push_back("av_planning length != future_horizon");
  for (const InfraPrediction& p : scene.infra_predictions) {
    if (p.points.empty()) out.push_back("infra_predictions[" + p.object_id + "]: empty");
    for (std::size_t i = 0; i < p.points.size(); ++i)
      if (!finite(p.points[i].x) || !finite(p.points[i].y))
        out.push_back("infra_predictions[" + p.object_id + "].points[" + std::to_string(i) +
                      "]: non-finite");
  }
  return out;
}

}  // namespace coopred
