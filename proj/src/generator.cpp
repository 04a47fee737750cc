#include "coopred/generator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace coopred {
namespace {

constexpr double kPi = 3.14159265358979323846;

/// Arclength-parameterized path. Sampled densely at construction so position
/// and tangent lookups are simple interpolation.
struct Path {
  std::vector<Vec2> pts;
  std::vector<double> cum;  // cumulative arclength

  void build(std::vector<Vec2> raw) {
    pts = std::move(raw);
    cum.assign(pts.size(), 0.0);
    for (std::size_t i = 1; i < pts.size(); ++i)
      cum[i] = cum[i - 1] + (pts[i] - pts[i - 1]).norm();
  }
  double length() const { return cum.empty() ? 0.0 : cum.back(); }
  Vec2 pos(double s) const {
    if (s <= 0.0) return pts.front();
    if (s >= length()) {
      // extend straight past the end
      const Vec2 d = tangent_at(pts.size() - 1);
      return pts.back() + d * (s - length());
    }
    const auto it = std::upper_bound(cum.begin(), cum.end(), s);
    const std::size_t i = static_cast<std::size_t>(it - cum.begin());
    const double seg = cum[i] - cum[i - 1];
    const double t = seg > 0.0 ? (s - cum[i - 1]) / seg : 0.0;
    return pts[i - 1] + (pts[i] - pts[i - 1]) * t;
  }
  double heading(double s) const {
    std::size_t i;
    if (s <= 0.0)
      i = 1;
    else if (s >= length())
      i = pts.size() - 1;
    else
      i = static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), s) - cum.begin());
    const Vec2 d = pts[i] - pts[i - 1];
    return std::atan2(d.y, d.x);
  }

 private:
  Vec2 tangent_at(std::size_t i) const {
    const Vec2 d = pts[i] - pts[i - 1];
    const double n = d.norm();
    return n > 0.0 ? Vec2{d.x / n, d.y / n} : Vec2{1.0, 0.0};
  }
};

/// Cubic Hermite blend between two posed endpoints; tangent magnitudes equal
/// to the chord keep curvature mild for the junction geometry used here.
std::vector<Vec2> hermite(Vec2 p0, double h0, Vec2 p1, double h1, int samples) {
  const double chord = (p1 - p0).norm();
  const Vec2 m0{std::cos(h0) * chord, std::sin(h0) * chord};
  const Vec2 m1{std::cos(h1) * chord, std::sin(h1) * chord};
  std::vector<Vec2> out;
  out.reserve(static_cast<std::size_t>(samples));
  for (int i = 1; i <= samples; ++i) {
    const double t = static_cast<double>(i) / samples;
    const double t2 = t * t, t3 = t2 * t;
    const double a = 2 * t3 - 3 * t2 + 1, b = t3 - 2 * t2 + t, c = -2 * t3 + 3 * t2,
                 d = t3 - t2;
    out.push_back({a * p0.x + b * m0.x + c * p1.x + d * m1.x,
                   a * p0.y + b * m0.y + c * p1.y + d * m1.y});
  }
  return out;
}

std::vector<Vec2> straight_line(Vec2 a, Vec2 b, double step) {
  std::vector<Vec2> out;
  const double len = (b - a).norm();
  const int n = std::max(1, static_cast<int>(std::ceil(len / step)));
  for (int i = 0; i <= n; ++i) {
    const double t = static_cast<double>(i) / n;
    out.push_back(a + (b - a) * t);
  }
  return out;
}

enum class Approach : uint8_t { kEast = 0, kWest = 1, kNorth = 2, kSouth = 3 };  // travel direction

struct AgentSpec {
  std::string id;
  ObjectType type = ObjectType::kVehicle;
  std::array<double, 3> bbox{4.6, 1.9, 1.6};
  Path path;
  double s0 = 0.0;
  double v0 = 8.0;
  double vstar = 8.0;
  int rank = 0;  // lower rank simulates first (higher priority)
  bool is_av = false;
  bool signal_bound = false;     // obeys the signal for its approach
  Approach approach = Approach::kEast;
  double stop_line_s = -1.0;     // arclength of the stop line on this path
  double event_time = 1e9;       // time at which vstar switches
  double event_vstar = 8.0;
  int path_group = -1;           // agents sharing a lane follow each other
};

struct SimAgent {
  AgentSpec spec;
  std::vector<ObjectState> traj;  // full duration, ground truth
};

struct SignalPlan {
  double period = 20.0;
  double offset = 0.0;
  // EW green [0,8), yellow [8,10), NS green [10,18), yellow [18,20)
  SignalPhase phase(Approach a, double t) const {
    const double u = std::fmod(t + offset, period);
    const bool ew = (a == Approach::kEast || a == Approach::kWest);
    if (ew) {
      if (u < 8.0) return SignalPhase::kGreen;
      if (u < 10.0) return SignalPhase::kYellow;
      return SignalPhase::kRed;
    }
    if (u < 10.0) return SignalPhase::kRed;
    if (u < 18.0) return SignalPhase::kGreen;
    return SignalPhase::kYellow;
  }
};

struct Conflict {
  double my_s = 0.0;       // arclength where my path meets the other trajectory
  const SimAgent* other = nullptr;
};

/// Finds the first point of `path` that comes within `radius` of any point of
/// the other agent's trajectory; returns arclength or -1.
double find_conflict_s(const Path& path, const std::vector<ObjectState>& other, double radius,
                       double s_from) {
  for (std::size_t i = 0; i < path.pts.size(); ++i) {
    if (path.cum[i] < s_from) continue;
    for (const ObjectState& o : other) {
      const double dx = path.pts[i].x - o.x, dy = path.pts[i].y - o.y;
      if (dx * dx + dy * dy < radius * radius) return path.cum[i];
    }
  }
  return -1.0;
}

class SceneBuilder {
 public:
  SceneBuilder(const GeneratorConfig& cfg, uint64_t seed) : cfg_(cfg), rng_(seed) {}

  Scene build() {
    if (cfg_.min_agents < 1 || cfg_.max_agents < cfg_.min_agents)
      throw std::invalid_argument("generator: agent count range must allow at least one agent");
    if (cfg_.history_steps < 2 || cfg_.future_steps < 2)
      throw std::invalid_argument("generator: horizons must be at least 2 steps");

    dt_ = 1.0 / cfg_.frequency_hz;
    total_steps_ = cfg_.history_steps + cfg_.future_steps;
    signal_.offset = rng_.uniform(0.0, signal_.period);

    Scene scene;
    scene.history_horizon = cfg_.history_steps;
    scene.future_horizon = cfg_.future_steps;
    scene.frequency_hz = cfg_.frequency_hz;

    if (cfg_.map_template == MapTemplate::kIntersection)
      build_intersection_map(scene);
    else
      build_straight_map(scene);

    spawn_agents();
    simulate_all();
    emit_tracks(scene);
    return scene;
  }

 private:
  // ----- map templates -----

  void add_polyline(Scene& scene, MapKind kind, std::vector<Vec2> pts, const char* stem) {
    MapElement e;
    e.element_id = std::string(stem) + "_" + std::to_string(scene.map.size());
    e.kind = kind;
    e.geometry = std::move(pts);
    scene.map.push_back(std::move(e));
  }

  void build_straight_map(Scene& scene) {
    lanes_per_dir_ = rng_.uniform_int(1, 2);
    const double w = cfg_.lane_width;
    for (int k = 0; k < lanes_per_dir_; ++k) {
      const double ye = -w * (k + 0.5), yw = w * (k + 0.5);
      add_polyline(scene, MapKind::kLaneLine, straight_line({-120, ye}, {120, ye}, 6.0), "lane_e");
      add_polyline(scene, MapKind::kLaneLine, straight_line({-120, yw}, {120, yw}, 6.0), "lane_w");
    }
    const double edge = w * lanes_per_dir_;
    add_polyline(scene, MapKind::kRoadLine, straight_line({-120, -edge}, {120, -edge}, 6.0), "edge");
    add_polyline(scene, MapKind::kRoadLine, straight_line({-120, edge}, {120, edge}, 6.0), "edge");
    add_polyline(scene, MapKind::kRoadLine, straight_line({-120, 0}, {120, 0}, 6.0), "center");

    // vehicle routes: one per lane per direction
    for (int k = 0; k < lanes_per_dir_; ++k) {
      Route r;
      r.approach = Approach::kEast;
      r.pts = straight_line({-140, -w * (k + 0.5)}, {140, -w * (k + 0.5)}, 2.0);
      routes_.push_back(r);
      Route r2;
      r2.approach = Approach::kWest;
      r2.pts = straight_line({140, w * (k + 0.5)}, {-140, w * (k + 0.5)}, 2.0);
      routes_.push_back(r2);
    }
    has_signals_ = false;
  }

  struct Route {
    std::vector<Vec2> pts;
    Approach approach = Approach::kEast;
    double stop_line_s = -1.0;
    bool crosses_junction = false;
  };

  void build_intersection_map(Scene& scene) {
    lanes_per_dir_ = rng_.uniform_int(1, 2);
    const double w = cfg_.lane_width;
    const double half = w * lanes_per_dir_;  // half road width
    const double boundary = half + 1.0;      // junction box edge

    // through lane centerlines for both roads
    for (int k = 0; k < lanes_per_dir_; ++k) {
      const double off = w * (k + 0.5);
      add_polyline(scene, MapKind::kLaneLine, straight_line({-120, -off}, {120, -off}, 6.0), "lane_e");
      add_polyline(scene, MapKind::kLaneLine, straight_line({120, off}, {-120, off}, 6.0), "lane_w");
      add_polyline(scene, MapKind::kLaneLine, straight_line({off, -120}, {off, 120}, 6.0), "lane_n");
      add_polyline(scene, MapKind::kLaneLine, straight_line({-off, 120}, {-off, -120}, 6.0), "lane_s");
    }
    // road edges stop at the junction box
    for (int sx : {-1, 1})
      for (int sy : {-1, 1}) {
        add_polyline(scene, MapKind::kRoadLine,
                     straight_line({sx * 120.0, sy * half}, {sx * boundary, sy * half}, 6.0), "edge_h");
        add_polyline(scene, MapKind::kRoadLine,
                     straight_line({sx * half, sy * 120.0}, {sx * half, sy * boundary}, 6.0), "edge_v");
      }

    // crosswalks: closed polygons just outside the junction box
    const double cw0 = boundary + 0.5, cw1 = boundary + 3.0;
    auto crosswalk = [&](Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
      add_polyline(scene, MapKind::kCrosswalk, {a, b, c, d, a}, "crosswalk");
    };
    crosswalk({-half, cw0}, {half, cw0}, {half, cw1}, {-half, cw1});      // north
    crosswalk({-half, -cw1}, {half, -cw1}, {half, -cw0}, {-half, -cw0});  // south
    crosswalk({cw0, -half}, {cw1, -half}, {cw1, half}, {cw0, half});      // east
    crosswalk({-cw1, -half}, {-cw0, -half}, {-cw0, half}, {-cw1, half});  // west

    // stop lines across the incoming lanes of each approach
    const double sl = boundary + 3.5;
    add_polyline(scene, MapKind::kStopLine, {{-sl, -half}, {-sl, 0}}, "stop_e");
    add_polyline(scene, MapKind::kStopLine, {{sl, 0}, {sl, half}}, "stop_w");
    add_polyline(scene, MapKind::kStopLine, {{0, -sl}, {half, -sl}}, "stop_n");
    add_polyline(scene, MapKind::kStopLine, {{-half, sl}, {0, sl}}, "stop_s");

    // signals at the four corners
    for (int i = 0; i < 4; ++i) {
      SignalRecord s;
      s.signal_id = "signal_" + std::to_string(i);
      const double c = boundary + 2.0;
      s.position = {i < 2 ? c : -c, (i % 2 == 0) ? c : -c};
      scene.signals.push_back(std::move(s));
    }
    signal_approaches_ = {Approach::kWest, Approach::kEast, Approach::kNorth, Approach::kSouth};

    // routes: through / left / right per approach (innermost lane turns left,
    // outermost turns right)
    const double step = 2.0;
    auto entry_exit = [&](Approach a, double off) -> std::pair<Vec2, Vec2> {
      switch (a) {
        case Approach::kEast: return {{-140, -off}, {-boundary, -off}};
        case Approach::kWest: return {{140, off}, {boundary, off}};
        case Approach::kNorth: return {{off, -140}, {off, -boundary}};
        case Approach::kSouth: return {{-off, 140}, {-off, boundary}};
      }
      return {{0, 0}, {0, 0}};
    };
    auto head = [](Approach a) {
      switch (a) {
        case Approach::kEast: return 0.0;
        case Approach::kWest: return kPi;
        case Approach::kNorth: return kPi / 2;
        case Approach::kSouth: return -kPi / 2;
      }
      return 0.0;
    };
    auto left_of = [](Approach a) {
      switch (a) {
        case Approach::kEast: return Approach::kNorth;
        case Approach::kNorth: return Approach::kWest;
        case Approach::kWest: return Approach::kSouth;
        case Approach::kSouth: return Approach::kEast;
      }
      return Approach::kNorth;
    };
    auto right_of = [](Approach a) {
      switch (a) {
        case Approach::kEast: return Approach::kSouth;
        case Approach::kSouth: return Approach::kWest;
        case Approach::kWest: return Approach::kNorth;
        case Approach::kNorth: return Approach::kEast;
      }
      return Approach::kSouth;
    };
    auto exit_pose = [&](Approach a, double off) -> Vec2 {
      // point where the exit straight begins, on the far side of the junction
      switch (a) {
        case Approach::kEast: return {boundary, -off};
        case Approach::kWest: return {-boundary, off};
        case Approach::kNorth: return {off, boundary};
        case Approach::kSouth: return {-off, -boundary};
      }
      return {0, 0};
    };
    auto exit_far = [&](Approach a, double off) -> Vec2 {
      const Vec2 p = exit_pose(a, off);
      const double h = head(a);
      return {p.x + 140 * std::cos(h), p.y + 140 * std::sin(h)};
    };

    for (int ai = 0; ai < 4; ++ai) {
      const Approach a = static_cast<Approach>(ai);
      for (int k = 0; k < lanes_per_dir_; ++k) {
        const double off = w * (k + 0.5);
        auto [start, brk] = entry_exit(a, off);
        std::vector<Vec2> base = straight_line(start, brk, step);

        auto finish = [&](std::vector<Vec2> pts, Approach exit_dir, double exit_off) {
          const Vec2 ep = exit_pose(exit_dir, exit_off);
          auto turn = hermite(pts.back(), head(a), ep, head(exit_dir),
                              std::max(8, static_cast<int>((ep - pts.back()).norm() / 1.5)));
          pts.insert(pts.end(), turn.begin(), turn.end());
          auto out = straight_line(ep, exit_far(exit_dir, exit_off), step);
          pts.insert(pts.end(), out.begin() + 1, out.end());
          Route r;
          r.approach = a;
          r.crosses_junction = true;
          r.pts = std::move(pts);
          // stop line sits just before the crosswalk on the approach
          double s = 0.0;
          for (std::size_t i = 1; i < r.pts.size(); ++i) {
            s += (r.pts[i] - r.pts[i - 1]).norm();
            if ((r.pts[i] - brk).norm() < 1e-6) break;
          }
          r.stop_line_s = s - 4.5;
          routes_.push_back(std::move(r));
        };

        // through
        {
          std::vector<Vec2> pts = base;
          auto rest = straight_line(brk, exit_far(a, off), step);
          pts.insert(pts.end(), rest.begin() + 1, rest.end());
          Route r;
          r.approach = a;
          r.crosses_junction = true;
          r.pts = std::move(pts);
          double s = 0.0;
          for (std::size_t i = 1; i < r.pts.size(); ++i) {
            s += (r.pts[i] - r.pts[i - 1]).norm();
            if ((r.pts[i] - brk).norm() < 1e-6) break;
          }
          r.stop_line_s = s - 4.5;
          routes_.push_back(std::move(r));
        }
        if (k == 0) finish(base, left_of(a), w * 0.5);
        if (k == lanes_per_dir_ - 1) finish(base, right_of(a), w * 0.5);
      }
    }

    // pedestrian crossing routes along each crosswalk
    const double px = boundary + 1.75;
    ped_routes_ = {
        straight_line({-half - 4, px}, {half + 4, px}, 1.0),
        straight_line({half + 4, -px}, {-half - 4, -px}, 1.0),
        straight_line({px, half + 4}, {px, -half - 4}, 1.0),
        straight_line({-px, -half - 4}, {-px, half + 4}, 1.0),
    };
    has_signals_ = true;
  }

  // ----- agents -----

  void spawn_agents() {
    const int n_agents = rng_.uniform_int(cfg_.min_agents, cfg_.max_agents);
    const int av_index = rng_.uniform_int(0, std::max(0, n_agents - 1));
    const double horizon_s = total_steps_ * dt_;

    std::map<int, double> last_offset_on_route;  // route index -> closest-to-junction s0 taken

    for (int i = 0; i < n_agents; ++i) {
      AgentSpec a;
      a.is_av = (i == av_index);
      const double kind_draw = rng_.uniform();
      if (!a.is_av && has_signals_ && kind_draw < cfg_.pedestrian_fraction) {
        a.type = ObjectType::kPedestrian;
        a.bbox = {0.6, 0.6, 1.7};
        a.id = "ped_" + std::to_string(i);
        Path p;
        p.build(ped_routes_[static_cast<std::size_t>(rng_.uniform_int(0, 3))]);
        a.path = std::move(p);
        a.v0 = a.vstar = rng_.uniform(1.0, 1.6);
        a.s0 = rng_.uniform(0.0, std::max(0.5, a.path.length() - a.vstar * horizon_s * 0.6));
        a.rank = 0;  // pedestrians have priority
      } else {
        const bool bike = !a.is_av && kind_draw < cfg_.pedestrian_fraction + cfg_.bicycle_fraction;
        a.type = bike ? ObjectType::kBicycle : ObjectType::kVehicle;
        a.bbox = bike ? std::array<double, 3>{1.8, 0.7, 1.4} : std::array<double, 3>{4.6, 1.9, 1.6};
        a.id = a.is_av ? "av" : (bike ? "bike_" : "veh_") + std::to_string(i);
        const int ri = rng_.uniform_int(0, static_cast<int>(routes_.size()) - 1);
        const Route& r = routes_[static_cast<std::size_t>(ri)];
        Path p;
        p.build(r.pts);
        a.approach = r.approach;
        a.signal_bound = has_signals_ && !bike && r.crosses_junction;
        a.stop_line_s = r.stop_line_s;
        a.path_group = ri;
        const double vmax = bike ? 4.5 : std::min(cfg_.max_speed, 13.0);
        a.vstar = rng_.uniform(0.5 * vmax, vmax);
        a.v0 = rng_.uniform(0.6, 1.0) * a.vstar;
        // place approaching the junction so the interesting part happens mid-scene
        const double travel = a.vstar * horizon_s;
        double lo = std::max(0.0, (a.stop_line_s > 0 ? a.stop_line_s : a.path.length() * 0.5) -
                                      travel * 1.1);
        double hi = std::max(lo + 1.0, (a.stop_line_s > 0 ? a.stop_line_s : a.path.length() * 0.5) -
                                           travel * 0.3);
        a.s0 = rng_.uniform(lo, hi);
        auto it = last_offset_on_route.find(ri);
        if (it != last_offset_on_route.end()) {
          // keep same-lane spawns separated
          const double cap = it->second - 14.0;
          if (a.s0 > cap) a.s0 = cap - rng_.uniform(0.0, 8.0);
          it->second = std::min(it->second, a.s0);
        } else {
          last_offset_on_route.emplace(ri, a.s0);
        }
        a.path = std::move(p);
        a.rank = 1 + rng_.uniform_int(0, 9);
        if (!a.is_av && rng_.uniform() < cfg_.yield_to_av_fraction) a.rank += 10;
        // mid-scenario speed change; sometimes after the observation window
        if (rng_.uniform() < 0.5) {
          a.event_time = rng_.uniform(0.3, 0.9) * horizon_s;
          const double f = rng_.uniform() < 0.5 ? rng_.uniform(0.35, 0.6) : rng_.uniform(1.2, 1.5);
          a.event_vstar = std::min(cfg_.max_speed, a.vstar * f);
        } else {
          a.event_vstar = a.vstar;
        }
      }
      specs_.push_back(std::move(a));
    }
    const AgentSpec* av = nullptr;
    for (auto& s : specs_)
      if (s.is_av) av = &s;
    if (av == nullptr) {  // all-pedestrian draw degenerated; force agent 0 to be the AV
      specs_[0].is_av = true;
      specs_[0].id = "av";
    }
  }

  void simulate_all() {
    std::vector<AgentSpec*> order;
    for (auto& s : specs_) order.push_back(&s);
    std::stable_sort(order.begin(), order.end(),
                     [](const AgentSpec* a, const AgentSpec* b) { return a->rank < b->rank; });
    for (AgentSpec* s : order) {
      SimAgent sim;
      sim.spec = *s;
      simulate_one(sim);
      agents_.push_back(std::move(sim));
    }
  }

  void simulate_one(SimAgent& agent) {
    const AgentSpec& sp = agent.spec;
    // conflicts against already-simulated (higher priority) agents
    std::vector<Conflict> conflicts;
    std::vector<const SimAgent*> same_lane;
    for (const SimAgent& other : agents_) {
      if (other.spec.type == ObjectType::kPedestrian && sp.type == ObjectType::kPedestrian)
        continue;
      if (sp.path_group >= 0 && other.spec.path_group == sp.path_group) {
        same_lane.push_back(&other);
        continue;
      }
      const double cs = find_conflict_s(sp.path, other.traj, 2.2, sp.s0);
      if (cs >= 0.0) conflicts.push_back({cs, &other});
    }

    const double a_max = cfg_.max_accel;
    const double brake = 0.7 * a_max;
    double s = sp.s0, v = std::min(sp.v0, cfg_.max_speed);
    agent.traj.resize(static_cast<std::size_t>(total_steps_));
    for (int t = 0; t < total_steps_; ++t) {
      const double now = t * dt_;
      double v_des = (now >= sp.event_time) ? sp.event_vstar : sp.vstar;

      auto limit_for_stop = [&](double stop_s) {
        const double d = stop_s - s;
        if (d <= 0.05)
          v_des = 0.0;
        else
          v_des = std::min(v_des, std::sqrt(2.0 * brake * d));
      };

      if (sp.signal_bound && sp.stop_line_s > 0 && s < sp.stop_line_s) {
        const SignalPhase ph = signal_.phase(sp.approach, now);
        const double d = sp.stop_line_s - s;
        const bool can_stop = v * v / (2.0 * brake) < d + 1.0;
        if (ph == SignalPhase::kRed || (ph == SignalPhase::kYellow && can_stop))
          limit_for_stop(sp.stop_line_s - 0.5);
      }
      for (const Conflict& c : conflicts) {
        if (s > c.my_s) continue;
        const double d = c.my_s - s;
        if (d > 45.0) continue;
        const double eta = d / std::max(v, 0.5);
        bool blocked = false;
        const int t_to = std::min(total_steps_ - 1,
                                  t + static_cast<int>((eta + 1.6) / dt_));
        for (int tt = t; tt <= t_to && !blocked; ++tt) {
          const ObjectState& o = c.other->traj[static_cast<std::size_t>(tt)];
          const Vec2 cp = sp.path.pos(c.my_s);
          const double dx = o.x - cp.x, dy = o.y - cp.y;
          if (dx * dx + dy * dy < 5.0 * 5.0) blocked = true;
        }
        if (blocked) limit_for_stop(c.my_s - 5.0);
      }
      for (const SimAgent* lead : same_lane) {
        const ObjectState& o = lead->traj[static_cast<std::size_t>(t)];
        const Vec2 me = sp.path.pos(s);
        const double h = sp.path.heading(s);
        const double gap = std::hypot(o.x - me.x, o.y - me.y);
        const double ahead = (o.x - me.x) * std::cos(h) + (o.y - me.y) * std::sin(h);
        if (ahead > 0 && gap < 40.0) limit_for_stop(s + gap - 9.0);
      }

      const double dv = std::clamp(v_des - v, -a_max * dt_, a_max * dt_);
      v = std::clamp(v + dv, 0.0, cfg_.max_speed);
      s += v * dt_;

      ObjectState st;
      const Vec2 p = sp.path.pos(s);
      st.x = p.x;
      st.y = p.y;
      st.heading = wrap_angle(sp.path.heading(s));
      st.speed = v;
      st.timestamp = now;
      agent.traj[static_cast<std::size_t>(t)] = st;
    }
  }

  // ----- observation synthesis -----

  Track observe(const SimAgent& agent, View view) {
    const AgentSpec& sp = agent.spec;
    Track tr;
    tr.object_id = sp.id;
    tr.object_type = sp.type;
    tr.bbox = sp.bbox;
    tr.view = view;
    const int th = cfg_.history_steps;
    tr.states.resize(static_cast<std::size_t>(th));
    tr.mask.assign(static_cast<std::size_t>(th), 0);
    tr.detection_scores.assign(static_cast<std::size_t>(th), 0.0);

    const bool self = (view == View::kAv && sp.is_av);
    const double occl = self ? 0.0
                             : (view == View::kAv ? cfg_.av_occlusion_rate
                                                  : cfg_.infra_occlusion_rate);
    const double sigma = self ? 0.0 : (view == View::kAv ? cfg_.av_noise_std : cfg_.infra_noise_std);

    for (int t = 0; t < th; ++t) {
      const bool dropped = rng_.uniform() < occl;
      if (dropped) continue;  // leave all-zero placeholder
      ObjectState st = agent.traj[static_cast<std::size_t>(t)];
      double score = 1.0;
      if (sigma > 0.0) {
        const double ex = rng_.normal(0.0, sigma), ey = rng_.normal(0.0, sigma);
        st.x += ex;
        st.y += ey;
        st.heading = wrap_angle(st.heading + rng_.normal(0.0, sigma * 0.1));
        st.speed = std::max(0.0, st.speed + rng_.normal(0.0, sigma));
        score = 1.0 - std::min(1.0, std::hypot(ex, ey) / (3.0 * sigma));
      }
      tr.states[static_cast<std::size_t>(t)] = st;
      tr.mask[static_cast<std::size_t>(t)] = 1;
      tr.detection_scores[static_cast<std::size_t>(t)] = score;
    }
    if (tr.last_valid_index() < 0) {
      // guarantee at least the final observation so the object yields a node
      tr.states.back() = agent.traj[static_cast<std::size_t>(th - 1)];
      tr.mask.back() = 1;
      tr.detection_scores.back() = 0.5;
    }
    return tr;
  }

  void emit_tracks(Scene& scene) {
    for (const SimAgent& a : agents_) {
      scene.av_tracks.push_back(observe(a, View::kAv));
      scene.infra_tracks.push_back(observe(a, View::kInfrastructure));
      FutureTrajectory fut;
      fut.object_id = a.spec.id;
      for (int t = cfg_.history_steps; t < total_steps_; ++t) {
        const ObjectState& st = a.traj[static_cast<std::size_t>(t)];
        fut.points.push_back({st.x, st.y});
        fut.mask.push_back(1);
      }
      scene.future_gt.push_back(std::move(fut));
      if (a.spec.is_av)
        scene.av_id = a.spec.id;
      else
        scene.target_ids.push_back(a.spec.id);
    }
    // stable ordering: tracks sorted by object id so scene bytes are
    // independent of simulation (priority) order
    auto by_id = [](const Track& x, const Track& y) { return x.object_id < y.object_id; };
    std::sort(scene.av_tracks.begin(), scene.av_tracks.end(), by_id);
    std::sort(scene.infra_tracks.begin(), scene.infra_tracks.end(), by_id);
    std::sort(scene.future_gt.begin(), scene.future_gt.end(),
              [](const FutureTrajectory& x, const FutureTrajectory& y) {
                return x.object_id < y.object_id;
              });
    std::sort(scene.target_ids.begin(), scene.target_ids.end());

    // signal phase sequences over the history window
    for (std::size_t i = 0; i < scene.signals.size(); ++i) {
      SignalRecord& s = scene.signals[i];
      s.phase_sequence.resize(static_cast<std::size_t>(cfg_.history_steps));
      for (int t = 0; t < cfg_.history_steps; ++t)
        s.phase_sequence[static_cast<std::size_t>(t)] =
            signal_.phase(signal_approaches_[i], t * dt_);
    }
  }

  const GeneratorConfig& cfg_;
  Rng rng_;
  double dt_ = 0.1;
  int total_steps_ = 0;
  int lanes_per_dir_ = 1;
  bool has_signals_ = false;
  SignalPlan signal_;
  std::vector<Route> routes_;
  std::vector<std::vector<Vec2>> ped_routes_;
  std::array<Approach, 4> signal_approaches_{};
  std::vector<AgentSpec> specs_;
  std::vector<SimAgent> agents_;
};

}  // namespace

Scene generate_scene(const GeneratorConfig& config, uint64_t seed) {
  SceneBuilder builder(config, seed);
  Scene scene = builder.build();
  scene.scene_id = "scene_" + std::to_string(seed);
  return scene;
}

}  // namespace coopred
