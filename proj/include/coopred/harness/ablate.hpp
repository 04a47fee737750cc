#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "coopred/harness/runconfig.hpp"
#include "coopred/metrics.hpp"
#include "coopred/scene.hpp"

namespace coopred {

/// Aggregated ablation outcome of one variant: mean and sample standard
/// deviation over seeds of the held-out metrics.
struct VariantResult {
  std::string variant;
  double mean_min_ade = 0.0, std_min_ade = 0.0;
  double mean_min_fde = 0.0, std_min_fde = 0.0;
  double mean_miss_rate = 0.0, std_miss_rate = 0.0;
  std::vector<MetricsReport> per_seed;
};

struct AblationTable {
  std::vector<VariantResult> rows;
  std::string to_text() const;  // aligned mean +/- std table
  std::string to_csv() const;
  std::string to_json() const;
};

/// Trains and evaluates every requested variant across seeds. The corpus
/// tail (eval_fraction of it, at least one scene) is held out from training
/// and used for metrics. Stage-1 infrastructure models are trained once per
/// seed and shared by all variants that consume infrastructure futures.
/// Progress lines go to `log` when given.
AblationTable run_ablation(const std::vector<Scene>& raw, const RunConfig& base,
                           const std::vector<std::string>& variants,
                           const std::vector<std::uint64_t>& seeds,
                           double eval_fraction = 0.15, std::ostream* log = nullptr);

}  // namespace coopred
