#include "coopred/io/adapter.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

#include "json.hpp"

namespace coopred {

namespace {

using nlohmann::json;

std::string upper(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return s;
}

ObjectType agent_type_from(const std::string& raw, std::vector<std::string>* warnings) {
  const std::string t = upper(raw);
  if (t == "CAR" || t == "VAN" || t == "TRUCK" || t == "BUS" || t == "VEHICLE")
    return ObjectType::kVehicle;
  if (t == "PEDESTRIAN") return ObjectType::kPedestrian;
  if (t == "CYCLIST" || t == "BICYCLE" || t == "MOTORCYCLIST") return ObjectType::kBicycle;
  // nearest-enum fallback for labels outside the known set
  ObjectType fallback = ObjectType::kVehicle;
  if (t.find("CYCL") != std::string::npos || t.find("BIKE") != std::string::npos)
    fallback = ObjectType::kBicycle;
  else if (t.find("PED") != std::string::npos)
    fallback = ObjectType::kPedestrian;
  if (warnings != nullptr)
    warnings->push_back("unknown agent type '" + raw + "' mapped to " + to_string(fallback));
  return fallback;
}

MapKind map_category_from(const std::string& raw) {
  const std::string c = upper(raw);
  if (c == "LANE") return MapKind::kLaneLine;
  if (c == "ROAD_LINE") return MapKind::kRoadLine;
  if (c == "CROSSWALK") return MapKind::kCrosswalk;
  if (c == "STOP_LINE") return MapKind::kStopLine;
  throw std::runtime_error("adapter: unknown map category: " + raw);
}

SignalPhase light_state_from(const std::string& raw) {
  const std::string s = upper(raw);
  if (s == "RED") return SignalPhase::kRed;
  if (s == "YELLOW") return SignalPhase::kYellow;
  if (s == "GREEN") return SignalPhase::kGreen;
  return SignalPhase::kUnknown;
}

std::vector<Track> view_tracks(const json& view, View which, std::vector<std::string>* warnings) {
  std::vector<Track> tracks;
  for (const auto& agent : view.at("agents")) {
    Track t;
    t.object_id = agent.at("id").get<std::string>();
    t.object_type = agent_type_from(agent.at("agent_type").get<std::string>(), warnings);
    const auto& size = agent.at("size");
    t.bbox = {size.at(0).get<double>(), size.at(1).get<double>(), size.at(2).get<double>()};
    t.view = which;
    for (const auto& frame : agent.at("frames")) {
      ObjectState s;
      const bool visible = frame.at("visible").get<bool>();
      if (visible) {
        s.x = frame.at("x").get<double>();
        s.y = frame.at("y").get<double>();
        s.heading = frame.at("theta").get<double>();
        s.speed = frame.at("v").get<double>();
        s.timestamp = frame.at("ts").get<double>();
      }
      t.states.push_back(s);
      t.mask.push_back(visible ? 1 : 0);
      t.detection_scores.push_back(visible ? frame.value("score", 1.0) : 0.0);
    }
    tracks.push_back(std::move(t));
  }
  return tracks;
}

}  // namespace

Scene adapt_external(const std::string& json_text, std::vector<std::string>* warnings) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("adapter: malformed record: ") + e.what());
  }
  for (const char* field : {"sequence_id", "ego_id", "frequency", "vehicle_view"})
    if (!j.contains(field)) throw std::runtime_error(std::string("adapter: missing ") + field);

  Scene s;
  s.scene_id = j.at("sequence_id").get<std::string>();
  s.av_id = j.at("ego_id").get<std::string>();
  s.frequency_hz = j.at("frequency").get<double>();
  if (j.contains("targets")) s.target_ids = j.at("targets").get<std::vector<std::string>>();

  s.av_tracks = view_tracks(j.at("vehicle_view"), View::kAv, warnings);
  if (j.contains("infrastructure_view"))
    s.infra_tracks = view_tracks(j.at("infrastructure_view"), View::kInfrastructure, warnings);
  if (!s.av_tracks.empty())
    s.history_horizon = static_cast<int>(s.av_tracks.front().states.size());

  if (j.contains("map_features"))
    for (const auto& f : j.at("map_features")) {
      MapElement e;
      e.element_id = f.at("id").get<std::string>();
      e.kind = map_category_from(f.at("category").get<std::string>());
      for (const auto& p : f.at("polyline"))
        e.geometry.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
      s.map.push_back(std::move(e));
    }

  if (j.contains("traffic_lights"))
    for (const auto& l : j.at("traffic_lights")) {
      SignalRecord rec;
      rec.signal_id = l.at("id").get<std::string>();
      rec.position = {l.at("x").get<double>(), l.at("y").get<double>()};
      for (const auto& st : l.at("states"))
        rec.phase_sequence.push_back(light_state_from(st.get<std::string>()));
      s.signals.push_back(std::move(rec));
    }

  if (j.contains("futures"))
    for (const auto& f : j.at("futures")) {
      FutureTrajectory t;
      t.object_id = f.at("id").get<std::string>();
      for (const auto& p : f.at("waypoints"))
        t.points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
      if (f.contains("observed"))
        for (const auto& o : f.at("observed")) t.mask.push_back(o.get<bool>() ? 1 : 0);
      else
        t.mask.assign(t.points.size(), 1);
      s.future_gt.push_back(std::move(t));
    }
  if (!s.future_gt.empty())
    s.future_horizon = static_cast<int>(s.future_gt.front().points.size());
  return s;
}

}  // namespace coopred
