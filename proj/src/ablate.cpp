#include "coopred/harness/ablate.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "coopred/harness/train.hpp"
#include "json.hpp"

namespace coopred {

namespace {

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd r;
  const auto n = static_cast<double>(xs.size());
  for (double x : xs) r.mean += x;
  r.mean /= n;
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - r.mean) * (x - r.mean);
    r.std = std::sqrt(ss / (n - 1.0));
  }
  return r;
}

}  // namespace

AblationTable run_ablation(const std::vector<Scene>& raw, const RunConfig& base,
                           const std::vector<std::string>& variants,
                           const std::vector<std::uint64_t>& seeds, double eval_fraction,
                           std::ostream* log) {
  if (variants.empty() || seeds.empty())
    throw std::invalid_argument("ablation: need at least one variant and one seed");
  if (eval_fraction <= 0.0 || eval_fraction >= 1.0)
    throw std::invalid_argument("ablation: eval_fraction must be in (0, 1)");
  if (raw.size() < 2) throw std::invalid_argument("ablation: need at least two scenes");

  std::size_t eval_count = static_cast<std::size_t>(
      std::llround(eval_fraction * static_cast<double>(raw.size())));
  eval_count = std::max<std::size_t>(1, std::min(eval_count, raw.size() - 1));
  const std::vector<Scene> train_raw(raw.begin(), raw.end() - static_cast<long>(eval_count));
  const std::vector<Scene> eval_raw(raw.end() - static_cast<long>(eval_count), raw.end());

  bool any_needs_infra = false;
  for (const std::string& name : variants)
    if (variant_by_name(name).use_infra_pred) any_needs_infra = true;

  AblationTable table;
  for (const std::string& name : variants) {
    VariantResult row;
    row.variant = name;
    table.rows.push_back(row);
  }

  for (std::uint64_t seed : seeds) {
    std::unique_ptr<CoMtp<float>> infra;
    if (any_needs_infra) {
      RunConfig stage = infra_stage_config(base);
      stage.seed = seed;
      infra = std::make_unique<CoMtp<float>>(stage.model_config(), stage.seed);
      if (log)
        *log << "[ablate] seed " << seed << ": training stage-1 " << stage.variant << "\n"
             << std::flush;
      const auto stage_corpus = prepare_corpus(train_raw, stage, nullptr);
      train_model(*infra, stage_corpus, stage);
    }

    for (std::size_t vi = 0; vi < variants.size(); ++vi) {
      RunConfig config = base;
      config.variant = variants[vi];
      config.seed = seed;
      CoMtp<float>* infra_ptr =
          variant_by_name(config.variant).use_infra_pred ? infra.get() : nullptr;
      if (log)
        *log << "[ablate] seed " << seed << ": training " << config.variant << "\n" << std::flush;
      CoMtp<float> model(config.model_config(), config.seed);
      const auto train_corpus = prepare_corpus(train_raw, config, infra_ptr);
      train_model(model, train_corpus, config);
      const auto eval_corpus = prepare_corpus(eval_raw, config, infra_ptr);
      const MetricsReport report = evaluate_model(model, eval_corpus, config);
      if (log)
        *log << "[ablate] seed " << seed << " " << config.variant << ": minADE "
             << report.min_ade << " minFDE " << report.min_fde << " MR " << report.miss_rate
             << "\n" << std::flush;
      table.rows[vi].per_seed.push_back(report);
    }
  }

  for (VariantResult& row : table.rows) {
    std::vector<double> ade, fde, mr;
    for (const MetricsReport& r : row.per_seed) {
      ade.push_back(r.min_ade);
      fde.push_back(r.min_fde);
      mr.push_back(r.miss_rate);
    }
    const MeanStd a = mean_std(ade), f = mean_std(fde), m = mean_std(mr);
    row.mean_min_ade = a.mean;
    row.std_min_ade = a.std;
    row.mean_min_fde = f.mean;
    row.std_min_fde = f.std;
    row.mean_miss_rate = m.mean;
    row.std_miss_rate = m.std;
  }
  return table;
}

std::string AblationTable::to_text() const {
  std::ostringstream out;
  out << std::left << std::setw(22) << "variant" << std::right << std::setw(18) << "minADE (m)"
      << std::setw(18) << "minFDE (m)" << std::setw(18) << "miss rate" << "\n";
  out << std::fixed << std::setprecision(3);
  for (const VariantResult& row : rows) {
    auto cell = [](double mean, double std) {
      std::ostringstream c;
      c << std::fixed << std::setprecision(3) << mean << " +/- " << std;
      return c.str();
    };
    out << std::left << std::setw(22) << row.variant << std::right << std::setw(18)
        << cell(row.mean_min_ade, row.std_min_ade) << std::setw(18)
        << cell(row.mean_min_fde, row.std_min_fde) << std::setw(18)
        << cell(row.mean_miss_rate, row.std_miss_rate) << "\n";
  }
  return out.str();
}

std::string AblationTable::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "variant,mean_min_ade,std_min_ade,mean_min_fde,std_min_fde,mean_miss_rate,"
         "std_miss_rate\n";
  for (const VariantResult& row : rows)
    out << row.variant << ',' << row.mean_min_ade << ',' << row.std_min_ade << ','
        << row.mean_min_fde << ',' << row.std_min_fde << ',' << row.mean_miss_rate << ','
        << row.std_miss_rate << "\n";
  return out.str();
}

std::string AblationTable::to_json() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const VariantResult& row : rows) {
    nlohmann::json per_seed = nlohmann::json::array();
    for (const MetricsReport& r : row.per_seed)
      per_seed.push_back({{"min_ade", r.min_ade},
                          {"min_fde", r.min_fde},
                          {"miss_rate", r.miss_rate},
                          {"num_targets", r.num_targets}});
    rows_json.push_back({{"variant", row.variant},
                         {"mean_min_ade", row.mean_min_ade},
                         {"std_min_ade", row.std_min_ade},
                         {"mean_min_fde", row.mean_min_fde},
                         {"std_min_fde", row.std_min_fde},
                         {"mean_miss_rate", row.mean_miss_rate},
                         {"std_miss_rate", row.std_miss_rate},
                         {"per_seed", per_seed}});
  }
  return nlohmann::json{{"rows", rows_json}}.dump(2);
}

}  // namespace coopred
