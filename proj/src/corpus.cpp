#include "coopred/io/corpus.hpp"

#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace coopred {

namespace {

using nlohmann::json;

ObjectType object_type_from(const std::string& s) {
  if (s == "vehicle") return ObjectType::kVehicle;
  if (s == "bicycle") return ObjectType::kBicycle;
  if (s == "pedestrian") return ObjectType::kPedestrian;
  throw std::invalid_argument("unknown object type: " + s);
}

MapKind map_kind_from(const std::string& s) {
  if (s == "lane_line") return MapKind::kLaneLine;
  if (s == "road_line") return MapKind::kRoadLine;
  if (s == "crosswalk") return MapKind::kCrosswalk;
  if (s == "stop_line") return MapKind::kStopLine;
  throw std::invalid_argument("unknown map kind: " + s);
}

json points_to_json(const std::vector<Vec2>& pts) {
  json arr = json::array();
  for (const Vec2& p : pts) arr.push_back({p.x, p.y});
  return arr;
}

std::vector<Vec2> points_from_json(const json& arr) {
  std::vector<Vec2> pts;
  for (const auto& p : arr) pts.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  return pts;
}

json track_to_json(const Track& t) {
  json j;
  j["object_id"] = t.object_id;
  j["type"] = to_string(t.object_type);
  j["bbox"] = {t.bbox[0], t.bbox[1], t.bbox[2]};
  json states = json::array();
  for (const ObjectState& s : t.states)
    states.push_back({s.x, s.y, s.heading, s.speed, s.timestamp});
  j["states"] = std::move(states);
  j["mask"] = t.mask;
  j["scores"] = t.detection_scores;
  return j;
}

Track track_from_json(const json& j, View view) {
  Track t;
  t.object_id = j.at("object_id").get<std::string>();
  t.object_type = object_type_from(j.at("type").get<std::string>());
  const auto& bbox = j.at("bbox");
  t.bbox = {bbox.at(0).get<double>(), bbox.at(1).get<double>(), bbox.at(2).get<double>()};
  for (const auto& row : j.at("states")) {
    ObjectState s;
    s.x = row.at(0).get<double>();
    s.y = row.at(1).get<double>();
    s.heading = row.at(2).get<double>();
    s.speed = row.at(3).get<double>();
    s.timestamp = row.at(4).get<double>();
    t.states.push_back(s);
  }
  t.mask = j.at("mask").get<std::vector<uint8_t>>();
  t.detection_scores = j.at("scores").get<std::vector<double>>();
  t.view = view;
  return t;
}

json scene_to_json(const Scene& s) {
  json j;
  j["scene_id"] = s.scene_id;
  j["av_id"] = s.av_id;
  j["target_ids"] = s.target_ids;
  j["history_horizon"] = s.history_horizon;
  j["future_horizon"] = s.future_horizon;
  j["frequency_hz"] = s.frequency_hz;

  json av = json::array(), infra = json::array();
  for (const Track& t : s.av_tracks) av.push_back(track_to_json(t));
  for (const Track& t : s.infra_tracks) infra.push_back(track_to_json(t));
  j["av_tracks"] = std::move(av);
  j["infra_tracks"] = std::move(infra);

  json map = json::array();
  for (const MapElement& m : s.map)
    map.push_back({{"element_id", m.element_id},
                   {"kind", to_string(m.kind)},
                   {"points", points_to_json(m.geometry)}});
  j["map"] = std::move(map);

  json sigs = json::array();
  for (const SignalRecord& rec : s.signals) {
    json phases = json::array();
    for (SignalPhase p : rec.phase_sequence) phases.push_back(static_cast<int>(p));
    sigs.push_back({{"signal_id", rec.signal_id},
                    {"position", {rec.position.x, rec.position.y}},
                    {"phases", std::move(phases)}});
  }
  j["signals"] = std::move(sigs);

  json futures = json::array();
  for (const FutureTrajectory& f : s.future_gt)
    futures.push_back(
        {{"object_id", f.object_id}, {"points", points_to_json(f.points)}, {"mask", f.mask}});
  j["future_gt"] = std::move(futures);

  j["av_planning"] = points_to_json(s.av_planning);

  json preds = json::array();
  for (const InfraPrediction& p : s.infra_predictions)
    preds.push_back({{"object_id", p.object_id}, {"points", points_to_json(p.points)}});
  j["infra_predictions"] = std::move(preds);
  return j;
}

Scene scene_from_json(const json& j) {
  Scene s;
  s.scene_id = j.at("scene_id").get<std::string>();
  s.av_id = j.at("av_id").get<std::string>();
  s.target_ids = j.at("target_ids").get<std::vector<std::string>>();
  s.history_horizon = j.at("history_horizon").get<int>();
  s.future_horizon = j.at("future_horizon").get<int>();
  s.frequency_hz = j.at("frequency_hz").get<double>();
  for (const auto& t : j.at("av_tracks")) s.av_tracks.push_back(track_from_json(t, View::kAv));
  for (const auto& t : j.at("infra_tracks"))
    s.infra_tracks.push_back(track_from_json(t, View::kInfrastructure));
  for (const auto& m : j.at("map")) {
    MapElement e;
    e.element_id = m.at("element_id").get<std::string>();
    e.kind = map_kind_from(m.at("kind").get<std::string>());
    e.geometry = points_from_json(m.at("points"));
    s.map.push_back(std::move(e));
  }
  for (const auto& rec : j.at("signals")) {
    SignalRecord r;
    r.signal_id = rec.at("signal_id").get<std::string>();
    r.position = {rec.at("position").at(0).get<double>(), rec.at("position").at(1).get<double>()};
    for (const auto& p : rec.at("phases")) {
      const int v = p.get<int>();
      if (v < 0 || v > 3) throw std::invalid_argument("signal phase out of range");
      r.phase_sequence.push_back(static_cast<SignalPhase>(v));
    }
    s.signals.push_back(std::move(r));
  }
  for (const auto& f : j.at("future_gt")) {
    FutureTrajectory t;
    t.object_id = f.at("object_id").get<std::string>();
    t.points = points_from_json(f.at("points"));
    t.mask = f.at("mask").get<std::vector<uint8_t>>();
    s.future_gt.push_back(std::move(t));
  }
  s.av_planning = points_from_json(j.at("av_planning"));
  for (const auto& p : j.at("infra_predictions")) {
    InfraPrediction pred;
    pred.object_id = p.at("object_id").get<std::string>();
    pred.points = points_from_json(p.at("points"));
    s.infra_predictions.push_back(std::move(pred));
  }
  return s;
}

bool states_equal(const ObjectState& a, const ObjectState& b) {
  return a.x == b.x && a.y == b.y && a.heading == b.heading && a.speed == b.speed &&
         a.timestamp == b.timestamp;
}

bool tracks_equal(const Track& a, const Track& b) {
  if (a.object_id != b.object_id || a.object_type != b.object_type || a.bbox != b.bbox ||
      a.view != b.view || a.mask != b.mask || a.detection_scores != b.detection_scores ||
      a.states.size() != b.states.size())
    return false;
  for (std::size_t i = 0; i < a.states.size(); ++i)
    if (!states_equal(a.states[i], b.states[i])) return false;
  return true;
}

bool points_equal(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].x != b[i].x || a[i].y != b[i].y) return false;
  return true;
}

}  // namespace

void write_corpus(const std::vector<Scene>& scenes, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("corpus: cannot open for writing: " + path);
  for (const Scene& s : scenes) out << scene_to_json(s).dump() << '\n';
  if (!out) throw std::runtime_error("corpus: write failed: " + path);
}

std::vector<Scene> read_corpus(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("corpus: cannot open: " + path);
  std::vector<Scene> scenes;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      scenes.push_back(scene_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error("corpus line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return scenes;
}

std::uint64_t fnv1a_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("hash: cannot open: " + path);
  std::uint64_t h = 14695981039346656037ull;
  char buf[4096];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const std::streamsize n = in.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
    if (!in) break;
  }
  return h;
}

CorpusManifest make_manifest(const std::string& corpus_path, const std::string& split) {
  CorpusManifest m;
  m.corpus_path = corpus_path;
  m.split = split;
  m.scene_count = static_cast<int>(read_corpus(corpus_path).size());
  m.content_hash = fnv1a_file(corpus_path);
  return m;
}

void write_manifest(const CorpusManifest& manifest, const std::string& path) {
  json j;
  j["corpus_path"] = manifest.corpus_path;
  j["split"] = manifest.split;
  j["scene_count"] = manifest.scene_count;
  j["content_hash"] = manifest.content_hash;
  j["schema_version"] = manifest.schema_version;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("manifest: cannot open for writing: " + path);
  out << j.dump(2) << '\n';
}

CorpusManifest read_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("manifest: cannot open: " + path);
  json j = json::parse(in);
  CorpusManifest m;
  m.corpus_path = j.at("corpus_path").get<std::string>();
  m.split = j.at("split").get<std::string>();
  m.scene_count = j.at("scene_count").get<int>();
  m.content_hash = j.at("content_hash").get<std::uint64_t>();
  m.schema_version = j.at("schema_version").get<int>();
  return m;
}

bool scenes_equal(const Scene& a, const Scene& b) {
  if (a.scene_id != b.scene_id || a.av_id != b.av_id || a.target_ids != b.target_ids ||
      a.history_horizon != b.history_horizon || a.future_horizon != b.future_horizon ||
      a.frequency_hz != b.frequency_hz)
    return false;
  if (a.av_tracks.size() != b.av_tracks.size() || a.infra_tracks.size() != b.infra_tracks.size())
    return false;
  for (std::size_t i = 0; i < a.av_tracks.size(); ++i)
    if (!tracks_equal(a.av_tracks[i], b.av_tracks[i])) return false;
  for (std::size_t i = 0; i < a.infra_tracks.size(); ++i)
    if (!tracks_equal(a.infra_tracks[i], b.infra_tracks[i])) return false;
  if (a.map.size() != b.map.size() || a.signals.size() != b.signals.size() ||
      a.future_gt.size() != b.future_gt.size() ||
      a.infra_predictions.size() != b.infra_predictions.size())
    return false;
  for (std::size_t i = 0; i < a.map.size(); ++i)
    if (a.map[i].element_id != b.map[i].element_id || a.map[i].kind != b.map[i].kind ||
        !points_equal(a.map[i].geometry, b.map[i].geometry))
      return false;
  for (std::size_t i = 0; i < a.signals.size(); ++i)
    if (a.signals[i].signal_id != b.signals[i].signal_id ||
        a.signals[i].position.x != b.signals[i].position.x ||
        a.signals[i].position.y != b.signals[i].position.y ||
        a.signals[i].phase_sequence != b.signals[i].phase_sequence)
      return false;
  for (std::size_t i = 0; i < a.future_gt.size(); ++i)
    if (a.future_gt[i].object_id != b.future_gt[i].object_id ||
        a.future_gt[i].mask != b.future_gt[i].mask ||
        !points_equal(a.future_gt[i].points, b.future_gt[i].points))
      return false;
  if (!points_equal(a.av_planning, b.av_planning)) return false;
  for (std::size_t i = 0; i < a.infra_predictions.size(); ++i)
    if (a.infra_predictions[i].object_id != b.infra_predictions[i].object_id ||
        !points_equal(a.infra_predictions[i].points, b.infra_predictions[i].points))
      return false;
  return true;
}

}  // namespace coopred
