#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "coopred/geom.hpp"

namespace coopred {

enum class ObjectType : uint8_t { kVehicle = 0, kBicycle = 1, kPedestrian = 2 };
enum class View : uint8_t { kAv = 0, kInfrastructure = 1 };
enum class MapKind : uint8_t { kLaneLine = 0, kRoadLine = 1, kCrosswalk = 2, kStopLine = 3 };
enum class SignalPhase : uint8_t { kRed = 0, kYellow = 1, kGreen = 2, kUnknown = 3 };

const char* to_string(ObjectType t);
const char* to_string(View v);
const char* to_string(MapKind k);
const char* to_string(SignalPhase p);

/// One timestamped kinematic sample of an object.
struct ObjectState {
  double x = 0.0;          // meters, global frame
  double y = 0.0;          // meters, global frame
  double heading = 0.0;    // radians in (-pi, pi]
  double speed = 0.0;      // meters/second, >= 0
  double timestamp = 0.0;  // seconds, >= 0
};

/// A per-view observed state sequence with validity mask. mask[t] == 0 means
/// the frame was not observed; states[t] is then an all-zero placeholder.
struct Track {
  std::string object_id;
  ObjectType object_type = ObjectType::kVehicle;
  std::array<double, 3> bbox{};  // length, width, height (m)
  std::vector<ObjectState> states;
  std::vector<uint8_t> mask;
  std::vector<double> detection_scores;  // in [0, 1], aligned with states
  View view = View::kAv;

  std::size_t length() const { return states.size(); }
  /// Index of the last frame with mask 1, or -1 if fully masked.
  int last_valid_index() const {
    for (int i = static_cast<int>(mask.size()) - 1; i >= 0; --i)
      if (mask[static_cast<std::size_t>(i)]) return i;
    return -1;
  }
  int valid_count() const {
    int n = 0;
    for (uint8_t m : mask) n += m ? 1 : 0;
    return n;
  }
};

/// Polyline (or closed polygon, first point repeated last) map element.
struct MapElement {
  std::string element_id;
  MapKind kind = MapKind::kLaneLine;
  std::vector<Vec2> geometry;  // >= 2 points
};

/// A traffic signal with one phase per history time step.
struct SignalRecord {
  std::string signal_id;
  Vec2 position;
  std::vector<SignalPhase> phase_sequence;  // length == history horizon
};

/// Noise-free future positions of one object, with validity mask.
struct FutureTrajectory {
  std::string object_id;
  std::vector<Vec2> points;
  std::vector<uint8_t> mask;
};

/// Future trajectory produced by the infrastructure-side model for one
/// object (highest-probability mode, global frame, prediction frequency).
struct InfraPrediction {
  std::string object_id;
  std::vector<Vec2> points;
};

/// A complete two-view prediction scenario.
struct Scene {
  std::string scene_id;
  std::vector<Track> av_tracks;     // view == kAv
  std::vector<Track> infra_tracks;  // view == kInfrastructure
  std::vector<MapElement> map;
  std::vector<SignalRecord> signals;
  std::string av_id;
  std::vector<std::string> target_ids;
  std::vector<FutureTrajectory> future_gt;
  std::vector<Vec2> av_planning;                  // filled by preprocess, t_f steps
  std::vector<InfraPrediction> infra_predictions; // filled by harness
  int history_horizon = 0;  // t_h: number of history steps per track
  int future_horizon = 0;   // t_f: number of future steps
  double frequency_hz = 10.0;

  const Track* find_track(const std::vector<Track>& tracks, const std::string& id) const {
    for (const auto& t : tracks)
      if (t.object_id == id) return &t;
    return nullptr;
  }
  const Track* av_track(const std::string& id) const { return find_track(av_tracks, id); }
  const Track* infra_track(const std::string& id) const { return find_track(infra_tracks, id); }
  const FutureTrajectory* future_of(const std::string& id) const {
    for (const auto& f : future_gt)
      if (f.object_id == id) return &f;
    return nullptr;
  }
};

}  // namespace coopred
