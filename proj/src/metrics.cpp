#include "coopred/metrics.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace coopred {

namespace {

void check_inputs(const std::vector<std::vector<Vec2>>& modes, const std::vector<Vec2>& gt,
                  const std::vector<uint8_t>& mask) {
  if (modes.empty()) throw std::invalid_argument("metrics: no modes");
  if (gt.size() != mask.size()) throw std::invalid_argument("metrics: gt/mask length mismatch");
  for (const auto& m : modes)
    if (m.size() != gt.size()) throw std::invalid_argument("metrics: mode length mismatch");
}

int last_valid(const std::vector<uint8_t>& mask) {
  for (int i = static_cast<int>(mask.size()) - 1; i >= 0; --i)
    if (mask[static_cast<std::size_t>(i)]) return i;
  throw std::invalid_argument("metrics: future fully masked");
}

}  // namespace

double min_ade(const std::vector<std::vector<Vec2>>& modes, const std::vector<Vec2>& gt,
               const std::vector<uint8_t>& mask) {
  check_inputs(modes, gt, mask);
  last_valid(mask);
  double best = 0.0;
  bool first = true;
  for (const auto& mode : modes) {
    double sum = 0.0;
    int n = 0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
      if (!mask[i]) continue;
      sum += (mode[i] - gt[i]).norm();
      ++n;
    }
    const double ade = sum / n;
    if (first || ade < best) {
      best = ade;
      first = false;
    }
  }
  return best;
}

double min_fde(const std::vector<std::vector<Vec2>>& modes, const std::vector<Vec2>& gt,
               const std::vector<uint8_t>& mask) {
  check_inputs(modes, gt, mask);
  const int f = last_valid(mask);
  double best = 0.0;
  bool first = true;
  for (const auto& mode : modes) {
    const double fde = (mode[static_cast<std::size_t>(f)] - gt[static_cast<std::size_t>(f)]).norm();
    if (first || fde < best) {
      best = fde;
      first = false;
    }
  }
  return best;
}

TargetMetrics evaluate_target(const std::vector<std::vector<Vec2>>& modes,
                              const std::vector<Vec2>& gt, const std::vector<uint8_t>& mask,
                              double miss_threshold) {
  TargetMetrics t;
  t.min_ade = min_ade(modes, gt, mask);
  t.min_fde = min_fde(modes, gt, mask);
  t.miss = t.min_fde > miss_threshold;
  return t;
}

MetricsReport aggregate(const std::vector<TargetMetrics>& per_target, double miss_threshold) {
  if (per_target.empty()) throw std::invalid_argument("metrics: no targets");
  MetricsReport r;
  r.miss_threshold = miss_threshold;
  r.num_targets = static_cast<int>(per_target.size());
  r.per_target = per_target;
  int missed = 0;
  for (const auto& t : per_target) {
    r.min_ade += t.min_ade;
    r.min_fde += t.min_fde;
    missed += t.miss ? 1 : 0;
  }
  r.min_ade /= r.num_targets;
  r.min_fde /= r.num_targets;
  r.miss_rate = static_cast<double>(missed) / r.num_targets;
  return r;
}

std::string to_json(const MetricsReport& report) {
  nlohmann::json j;
  j["min_ade"] = report.min_ade;
  j["min_fde"] = report.min_fde;
  j["miss_rate"] = report.miss_rate;
  j["num_targets"] = report.num_targets;
  j["miss_threshold"] = report.miss_threshold;
  auto& arr = j["per_target"] = nlohmann::json::array();
  for (const auto& t : report.per_target)
    arr.push_back({{"min_ade", t.min_ade}, {"min_fde", t.min_fde}, {"miss", t.miss}});
  return j.dump(2);
}

std::string to_csv(const MetricsReport& report) {
  std::ostringstream out;
  out << "target,min_ade,min_fde,miss\n";
  for (std::size_t i = 0; i < report.per_target.size(); ++i) {
    const auto& t = report.per_target[i];
    out << i << ',' << t.min_ade << ',' << t.min_fde << ',' << (t.miss ? 1 : 0) << '\n';
  }
  out << "mean," << report.min_ade << ',' << report.min_fde << ',' << report.miss_rate << '\n';
  return out.str();
}

}  // namespace coopred
