#include "coopred/harness/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace coopred {

namespace {

struct Rgb {
  std::uint8_t r, g, b;
};

constexpr Rgb kMap{190, 190, 190};
constexpr Rgb kCrosswalk{160, 160, 160};
constexpr Rgb kHistory{30, 60, 235};
constexpr Rgb kFutureGt{139, 69, 19};
constexpr Rgb kPrediction{20, 150, 40};
constexpr Rgb kAv{220, 30, 30};
constexpr Rgb kTarget{255, 150, 20};
constexpr Rgb kSignal{120, 40, 160};

struct Canvas {
  int w, h;
  std::vector<std::uint8_t> px;

  Canvas(int width, int height)
      : w(width), h(height), px(static_cast<std::size_t>(width) * height * 3, 255) {}

  void set(int x, int y, Rgb c) {
    if (x < 0 || y < 0 || x >= w || y >= h) return;
    const std::size_t i = (static_cast<std::size_t>(y) * w + x) * 3;
    px[i] = c.r;
    px[i + 1] = c.g;
    px[i + 2] = c.b;
  }

  void set_thick(int x, int y, Rgb c, int r) {
    for (int dy = -r; dy <= r; ++dy)
      for (int dx = -r; dx <= r; ++dx)
        if (dx * dx + dy * dy <= r * r) set(x + dx, y + dy, c);
  }

  void line(int x0, int y0, int x1, int y1, Rgb c, int thick) {
    const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
    const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    while (true) {
      set_thick(x0, y0, c, thick);
      if (x0 == x1 && y0 == y1) break;
      const int e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        x0 += sx;
      }
      if (e2 <= dx) {
        err += dx;
        y0 += sy;
      }
    }
  }
};

struct Projection {
  double min_x, min_y, scale;
  double off_x, off_y;
  int h;

  int px(double x) const { return static_cast<int>(std::lround((x - min_x) * scale + off_x)); }
  int py(double y) const {
    return h - 1 - static_cast<int>(std::lround((y - min_y) * scale + off_y));
  }
};

struct Bounds {
  double min_x = std::numeric_limits<double>::infinity();
  double min_y = std::numeric_limits<double>::infinity();
  double max_x = -std::numeric_limits<double>::infinity();
  double max_y = -std::numeric_limits<double>::infinity();

  void add(double x, double y) {
    min_x = std::min(min_x, x);
    min_y = std::min(min_y, y);
    max_x = std::max(max_x, x);
    max_y = std::max(max_y, y);
  }
  bool valid() const { return min_x <= max_x && min_y <= max_y; }
};

void draw_polyline(Canvas& canvas, const Projection& proj, const std::vector<Vec2>& points,
                   Rgb color, int thick) {
  for (std::size_t i = 1; i < points.size(); ++i)
    canvas.line(proj.px(points[i - 1].x), proj.py(points[i - 1].y), proj.px(points[i].x),
                proj.py(points[i].y), color, thick);
}

void draw_track_history(Canvas& canvas, const Projection& proj, const Track& track, Rgb color) {
  std::vector<Vec2> run;
  for (std::size_t t = 0; t < track.states.size(); ++t) {
    if (track.mask[t]) {
      run.push_back({track.states[t].x, track.states[t].y});
    } else if (!run.empty()) {
      draw_polyline(canvas, proj, run, color, 1);
      run.clear();
    }
  }
  draw_polyline(canvas, proj, run, color, 1);
  if (!run.empty())
    canvas.set_thick(proj.px(run.back().x), proj.py(run.back().y), color, 2);
}

void draw_box(Canvas& canvas, const Projection& proj, const ObjectState& state, double length,
              double width, Rgb color) {
  const double c = std::cos(state.heading), s = std::sin(state.heading);
  const double hl = std::max(length, 1.0) / 2.0, hw = std::max(width, 0.6) / 2.0;
  const Vec2 corners[4] = {{state.x + c * hl - s * hw, state.y + s * hl + c * hw},
                           {state.x + c * hl + s * hw, state.y + s * hl - c * hw},
                           {state.x - c * hl + s * hw, state.y - s * hl - c * hw},
                           {state.x - c * hl - s * hw, state.y - s * hl + c * hw}};
  for (int i = 0; i < 4; ++i) {
    const Vec2& a = corners[i];
    const Vec2& b = corners[(i + 1) % 4];
    canvas.line(proj.px(a.x), proj.py(a.y), proj.px(b.x), proj.py(b.y), color, 1);
  }
}

}  // namespace

void render_scene(const Scene& scene, const std::vector<TargetPrediction>& predictions,
                  const std::string& path, const RenderOptions& options) {
  if (options.width < 16 || options.height < 16)
    throw std::invalid_argument("render: canvas too small");

  Bounds bounds;
  for (const MapElement& el : scene.map)
    for (const Vec2& p : el.geometry) bounds.add(p.x, p.y);
  auto add_tracks = [&bounds](const std::vector<Track>& tracks) {
    for (const Track& t : tracks)
      for (std::size_t i = 0; i < t.states.size(); ++i)
        if (t.mask[i]) bounds.add(t.states[i].x, t.states[i].y);
  };
  add_tracks(scene.av_tracks);
  add_tracks(scene.infra_tracks);
  for (const FutureTrajectory& f : scene.future_gt)
    for (std::size_t i = 0; i < f.points.size(); ++i)
      if (i < f.mask.size() && f.mask[i]) bounds.add(f.points[i].x, f.points[i].y);
  if (!bounds.valid()) throw std::invalid_argument("render: scene has no drawable content");

  bounds.min_x -= options.margin_m;
  bounds.min_y -= options.margin_m;
  bounds.max_x += options.margin_m;
  bounds.max_y += options.margin_m;

  const double span_x = std::max(bounds.max_x - bounds.min_x, 1.0);
  const double span_y = std::max(bounds.max_y - bounds.min_y, 1.0);
  Projection proj;
  proj.min_x = bounds.min_x;
  proj.min_y = bounds.min_y;
  proj.scale = std::min(options.width / span_x, options.height / span_y);
  proj.off_x = (options.width - span_x * proj.scale) / 2.0;
  proj.off_y = (options.height - span_y * proj.scale) / 2.0;
  proj.h = options.height;

  Canvas canvas(options.width, options.height);

  for (const MapElement& el : scene.map)
    draw_polyline(canvas, proj, el.geometry,
                  el.kind == MapKind::kCrosswalk ? kCrosswalk : kMap, 0);
  for (const SignalRecord& sig : scene.signals)
    canvas.set_thick(proj.px(sig.position.x), proj.py(sig.position.y), kSignal, 2);

  for (const Track& t : scene.infra_tracks)
    if (t.object_id != scene.av_id) draw_track_history(canvas, proj, t, kHistory);
  for (const Track& t : scene.av_tracks)
    if (t.object_id != scene.av_id) draw_track_history(canvas, proj, t, kHistory);

  for (const FutureTrajectory& f : scene.future_gt) {
    std::vector<Vec2> run;
    for (std::size_t i = 0; i < f.points.size(); ++i) {
      if (i < f.mask.size() && f.mask[i]) run.push_back(f.points[i]);
    }
    draw_polyline(canvas, proj, run, kFutureGt, 0);
  }

  for (const TargetPrediction& pred : predictions)
    for (const auto& mode : pred.modes) {
      std::vector<Vec2> global;
      global.reserve(mode.size());
      for (const Vec2& p : mode) global.push_back(local_to_global(p, pred.frame));
      draw_polyline(canvas, proj, global, kPrediction, 0);
    }

  auto find_any_track = [&scene](const std::string& id) -> const Track* {
    const Track* t = scene.av_track(id);
    if (t != nullptr && t->last_valid_index() >= 0) return t;
    t = scene.infra_track(id);
    if (t != nullptr && t->last_valid_index() >= 0) return t;
    return nullptr;
  };

  for (const std::string& id : scene.target_ids) {
    const Track* t = find_any_track(id);
    if (t == nullptr || id == scene.av_id) continue;
    const int last = t->last_valid_index();
    draw_box(canvas, proj, t->states[static_cast<std::size_t>(last)], t->bbox[0], t->bbox[1],
             kTarget);
  }

  if (const Track* av = find_any_track(scene.av_id)) {
    const int last = av->last_valid_index();
    draw_box(canvas, proj, av->states[static_cast<std::size_t>(last)], av->bbox[0], av->bbox[1],
             kAv);
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("render: cannot open " + path);
  out << "P6\n" << options.width << ' ' << options.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(canvas.px.data()),
            static_cast<std::streamsize>(canvas.px.size()));
  if (!out) throw std::runtime_error("render: write failed for " + path);
}

}  // namespace coopred
