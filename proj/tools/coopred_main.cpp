#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "coopred/generator.hpp"
#include "coopred/harness/ablate.hpp"
#include "coopred/harness/render.hpp"
#include "coopred/harness/runconfig.hpp"
#include "coopred/harness/train.hpp"
#include "coopred/io/checkpoint.hpp"
#include "coopred/io/corpus.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace coopred;

namespace {

/// Relative output paths land under $COOPRED_OUT_DIR when it is set.
std::string resolve_out(const std::string& path) {
  if (path.empty() || fs::path(path).is_absolute()) return path;
  const std::string base = output_dir(".");
  if (base == ".") return path;
  return (fs::path(base) / path).string();
}

void ensure_parent(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

void write_text(const std::string& path, const std::string& text) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << text;
}

RunConfig load_config_opt(const std::string& config_path) {
  if (config_path.empty()) return RunConfig{};
  return load_run_config(config_path);
}

std::vector<Scene> load_corpus(const std::string& path, int max_scenes) {
  std::vector<Scene> scenes = read_corpus(path);
  if (max_scenes > 0 && static_cast<int>(scenes.size()) > max_scenes)
    scenes.resize(static_cast<std::size_t>(max_scenes));
  if (scenes.empty()) throw std::runtime_error("corpus is empty: " + path);
  return scenes;
}

struct LoadedModel {
  CheckpointMeta meta;
  std::unique_ptr<CoMtp<float>> model;
};

LoadedModel load_model(const std::string& path) {
  LoadedModel lm;
  lm.meta = peek_checkpoint(path);
  lm.model = std::make_unique<CoMtp<float>>(lm.meta.model, 0);
  load_checkpoint(path, lm.model->store());
  return lm;
}

/// Checkpoint metadata is authoritative for architecture and variant; the
/// run config keeps schedule, graph limits, and injection settings.
RunConfig apply_meta(RunConfig config, const CheckpointMeta& meta) {
  config.variant = meta.variant;
  config.hidden_dim = meta.model.hidden_dim;
  config.heads = meta.model.heads;
  config.layers = meta.model.layers;
  config.temporal_layers = meta.model.temporal_layers;
  config.modes = meta.model.modes;
  config.history_steps = meta.model.history_steps;
  config.future_steps = meta.model.future_steps;
  config.ffn_mult = meta.model.ffn_mult;
  config.conv_channels = meta.model.conv_channels;
  config.pos_scale = meta.model.pos_scale;
  return config;
}

std::vector<std::string> split_csv(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

nlohmann::json report_json(const MetricsReport& r) {
  return nlohmann::json::parse(to_json(r));
}

int cmd_generate(const std::string& out_path, int count, std::uint64_t seed,
                 const std::string& map_template, int min_agents, int max_agents,
                 double av_occlusion) {
  GeneratorConfig gc;
  gc.min_agents = min_agents;
  gc.max_agents = max_agents;
  gc.av_occlusion_rate = av_occlusion;
  if (map_template == "intersection") gc.map_template = MapTemplate::kIntersection;
  else if (map_template == "straight") gc.map_template = MapTemplate::kStraight;
  else throw std::runtime_error("unknown map template: " + map_template);

  std::vector<Scene> scenes;
  scenes.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i)
    scenes.push_back(generate_scene(gc, seed + static_cast<std::uint64_t>(i)));

  const std::string corpus_path = resolve_out(out_path);
  ensure_parent(corpus_path);
  write_corpus(scenes, corpus_path);
  const CorpusManifest manifest = make_manifest(corpus_path, "train");
  const std::string manifest_path = corpus_path + ".manifest.json";
  write_manifest(manifest, manifest_path);
  std::cout << "wrote " << scenes.size() << " scenes to " << corpus_path << "\n"
            << "manifest " << manifest_path << " (hash " << manifest.content_hash << ")\n";
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& corpus_path,
              const std::string& out_dir, const std::string& variant_override,
              std::uint64_t seed_override, int epochs_override, int max_scenes) {
  RunConfig config = load_config_opt(config_path);
  if (!variant_override.empty()) config.variant = variant_override;
  if (seed_override != 0) config.seed = seed_override;
  if (epochs_override > 0) config.epochs = epochs_override;
  if (max_scenes > 0) config.max_scenes = max_scenes;
  config.validate();

  const std::vector<Scene> raw = load_corpus(corpus_path, config.max_scenes);
  std::cout << "training variant " << config.variant << " on " << raw.size() << " scenes, "
            << config.epochs << " epochs\n";
  const TrainedPair trained = train_variant(raw, config);

  const std::string dir = resolve_out(out_dir);
  fs::create_directories(dir);
  CheckpointMeta meta;
  meta.model = config.model_config();
  meta.variant = config.variant;
  meta.epoch = config.epochs;
  meta.adam_step = trained.summary.steps;
  meta.metric_history = trained.summary.epoch_loss;
  const std::string model_path = (fs::path(dir) / "model.ckpt").string();
  save_checkpoint(model_path, trained.model->store(), meta);
  std::cout << "saved " << model_path << " (final loss " << meta.metric_history.back() << ")\n";

  if (trained.infra) {
    CheckpointMeta infra_meta;
    const RunConfig stage = infra_stage_config(config);
    infra_meta.model = stage.model_config();
    infra_meta.variant = stage.variant;
    infra_meta.epoch = stage.epochs;
    infra_meta.adam_step = trained.infra_summary.steps;
    infra_meta.metric_history = trained.infra_summary.epoch_loss;
    const std::string infra_path = (fs::path(dir) / "infra.ckpt").string();
    save_checkpoint(infra_path, trained.infra->store(), infra_meta);
    std::cout << "saved " << infra_path << " (stage-1 " << stage.variant << ")\n";
  }

  nlohmann::json history = {{"variant", config.variant},
                            {"epochs", config.epochs},
                            {"loss", trained.summary.epoch_loss}};
  if (trained.infra) history["infra_loss"] = trained.infra_summary.epoch_loss;
  write_text((fs::path(dir) / "history.json").string(), history.dump(2) + "\n");
  write_text((fs::path(dir) / "run_config.txt").string(), to_text(config));
  return 0;
}

MetricsReport eval_checkpoint(const std::string& ckpt, const std::string& infra_ckpt,
                              const std::vector<Scene>& raw, RunConfig config) {
  LoadedModel lm = load_model(ckpt);
  config = apply_meta(config, lm.meta);
  std::unique_ptr<CoMtp<float>> infra;
  if (variant_by_name(config.variant).use_infra_pred) {
    if (infra_ckpt.empty())
      throw std::runtime_error("variant '" + config.variant +
                               "' consumes infrastructure futures; pass --infra-ckpt");
    LoadedModel li = load_model(infra_ckpt);
    infra = std::move(li.model);
  }
  const auto corpus = prepare_corpus(raw, config, infra.get());
  return evaluate_model(*lm.model, corpus, config);
}

int cmd_eval(const std::string& ckpt, const std::string& infra_ckpt,
             const std::string& corpus_path, const std::string& config_path,
             const std::string& report_path, const std::string& csv_path, double noise,
             double delay, int max_scenes) {
  RunConfig config = load_config_opt(config_path);
  config.noise_std = noise;
  config.delay_s = delay;
  const std::vector<Scene> raw = load_corpus(corpus_path, max_scenes);
  const MetricsReport report = eval_checkpoint(ckpt, infra_ckpt, raw, config);
  std::cout << "targets " << report.num_targets << "  minADE " << report.min_ade << "  minFDE "
            << report.min_fde << "  MR " << report.miss_rate << "\n";
  if (!report_path.empty()) write_text(resolve_out(report_path), to_json(report) + "\n");
  if (!csv_path.empty()) write_text(resolve_out(csv_path), to_csv(report));
  return 0;
}

int cmd_ablate(const std::string& corpus_path, const std::string& config_path,
               const std::string& variants_csv, const std::string& seeds_csv,
               const std::string& out_prefix, double eval_fraction, int epochs_override,
               int max_scenes) {
  RunConfig config = load_config_opt(config_path);
  if (epochs_override > 0) config.epochs = epochs_override;
  const std::vector<Scene> raw = load_corpus(corpus_path, max_scenes);
  const std::vector<std::string> variants = split_csv(variants_csv);
  std::vector<std::uint64_t> seeds;
  for (const std::string& s : split_csv(seeds_csv)) seeds.push_back(std::stoull(s));

  const AblationTable table =
      run_ablation(raw, config, variants, seeds, eval_fraction, &std::cout);
  std::cout << "\n" << table.to_text();
  if (!out_prefix.empty()) {
    const std::string prefix = resolve_out(out_prefix);
    write_text(prefix + ".txt", table.to_text());
    write_text(prefix + ".csv", table.to_csv());
    write_text(prefix + ".json", table.to_json() + "\n");
    std::cout << "wrote " << prefix << ".{txt,csv,json}\n";
  }
  return 0;
}

int cmd_robustness(const std::string& ckpt, const std::string& infra_ckpt,
                   const std::string& corpus_path, const std::string& config_path,
                   double noise, double delay, const std::string& report_path,
                   int max_scenes) {
  const RunConfig base = load_config_opt(config_path);
  const std::vector<Scene> raw = load_corpus(corpus_path, max_scenes);

  struct Condition {
    std::string name;
    double noise, delay;
  };
  const std::vector<Condition> conditions = {
      {"clean", 0.0, 0.0}, {"noise", noise, 0.0}, {"delay", 0.0, delay}};

  nlohmann::json rows = nlohmann::json::array();
  std::cout << "condition   minADE    minFDE    MR\n";
  for (const Condition& cond : conditions) {
    RunConfig config = base;
    config.noise_std = cond.noise;
    config.delay_s = cond.delay;
    const MetricsReport r = eval_checkpoint(ckpt, infra_ckpt, raw, config);
    std::cout << cond.name << (cond.name.size() < 8 ? std::string(8 - cond.name.size(), ' ')
                                                    : " ")
              << "  " << r.min_ade << "  " << r.min_fde << "  " << r.miss_rate << "\n";
    nlohmann::json row = report_json(r);
    row["condition"] = cond.name;
    row["noise_std"] = cond.noise;
    row["delay_s"] = cond.delay;
    row.erase("per_target");
    rows.push_back(row);
  }
  if (!report_path.empty())
    write_text(resolve_out(report_path), nlohmann::json{{"rows", rows}}.dump(2) + "\n");
  return 0;
}

int cmd_render(const std::string& corpus_path, int index, const std::string& scene_id,
               const std::string& ckpt, const std::string& infra_ckpt,
               const std::string& out_path, int width, int height,
               const std::string& config_path) {
  const std::vector<Scene> raw = load_corpus(corpus_path, 0);
  int chosen = index;
  if (!scene_id.empty()) {
    chosen = -1;
    for (std::size_t i = 0; i < raw.size(); ++i)
      if (raw[i].scene_id == scene_id) chosen = static_cast<int>(i);
    if (chosen < 0) throw std::runtime_error("scene id not found: " + scene_id);
  }
  if (chosen < 0 || chosen >= static_cast<int>(raw.size()))
    throw std::runtime_error("scene index out of range");

  std::vector<TargetPrediction> preds;
  Scene to_draw = raw[static_cast<std::size_t>(chosen)];
  if (!ckpt.empty()) {
    RunConfig config = load_config_opt(config_path);
    LoadedModel lm = load_model(ckpt);
    config = apply_meta(config, lm.meta);
    std::unique_ptr<CoMtp<float>> infra;
    if (variant_by_name(config.variant).use_infra_pred) {
      if (infra_ckpt.empty())
        throw std::runtime_error("variant '" + config.variant +
                                 "' consumes infrastructure futures; pass --infra-ckpt");
      LoadedModel li = load_model(infra_ckpt);
      infra = std::move(li.model);
    }
    const std::vector<Scene> one(1, to_draw);
    const auto corpus = prepare_corpus(one, config, infra.get());
    nn::Graph<float> g;
    const auto out = lm.model->forward(g, corpus[0].inputs, false);
    preds = extract_predictions(g, out, corpus[0].inputs, lm.model->config());
    to_draw = corpus[0].scene;
  }

  RenderOptions options;
  options.width = width;
  options.height = height;
  const std::string path = resolve_out(out_path);
  ensure_parent(path);
  render_scene(to_draw, preds, path, options);
  std::cout << "wrote " << path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cooperative multi-temporal trajectory prediction toolkit"};
  app.require_subcommand(1);

  // generate
  auto* generate = app.add_subcommand("generate", "synthesize a scene corpus");
  std::string gen_out = "corpus.jsonl", gen_template = "intersection";
  int gen_count = 2000, gen_min_agents = 4, gen_max_agents = 8;
  std::uint64_t gen_seed = 1;
  double gen_occlusion = 0.3;
  generate->add_option("--out", gen_out, "corpus path (JSONL)");
  generate->add_option("--count", gen_count, "number of scenes")->check(CLI::PositiveNumber);
  generate->add_option("--seed", gen_seed, "base seed; scene i uses seed+i");
  generate->add_option("--template", gen_template, "map template: intersection|straight");
  generate->add_option("--min-agents", gen_min_agents, "minimum agents per scene");
  generate->add_option("--max-agents", gen_max_agents, "maximum agents per scene");
  generate->add_option("--occlusion", gen_occlusion, "AV-view per-frame occlusion rate");

  // train
  auto* train = app.add_subcommand("train", "train one variant (two stages when needed)");
  std::string train_config, train_corpus, train_out = "runs/train", train_variant_opt;
  std::uint64_t train_seed = 0;
  int train_epochs = 0, train_max_scenes = 0;
  train->add_option("--config", train_config, "run config file (key = value lines)");
  train->add_option("--corpus", train_corpus, "training corpus")->required();
  train->add_option("--out", train_out, "output directory for checkpoints");
  train->add_option("--variant", train_variant_opt, "variant override");
  train->add_option("--seed", train_seed, "seed override (0 keeps config)");
  train->add_option("--epochs", train_epochs, "epoch override (0 keeps config)");
  train->add_option("--max-scenes", train_max_scenes, "cap on corpus size");

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a corpus");
  std::string eval_ckpt, eval_infra, eval_corpus, eval_config, eval_report, eval_csv;
  double eval_noise = 0.0, eval_delay = 0.0;
  int eval_max_scenes = 0;
  eval->add_option("--ckpt", eval_ckpt, "model checkpoint")->required();
  eval->add_option("--infra-ckpt", eval_infra, "stage-1 checkpoint for future-fusion variants");
  eval->add_option("--corpus", eval_corpus, "evaluation corpus")->required();
  eval->add_option("--config", eval_config, "run config file");
  eval->add_option("--report", eval_report, "metrics JSON output path");
  eval->add_option("--csv", eval_csv, "per-target CSV output path");
  eval->add_option("--noise", eval_noise, "Gaussian noise std on infra data (m)");
  eval->add_option("--delay", eval_delay, "infra communication delay (s)");
  eval->add_option("--max-scenes", eval_max_scenes, "cap on corpus size");

  // ablate
  auto* ablate = app.add_subcommand("ablate", "train and compare fusion variants");
  std::string ab_corpus, ab_config, ab_out;
  std::string ab_variants = "full,v4_stitch_full_infra,v1_av_only";
  std::string ab_seeds = "1,2,3";
  double ab_eval_fraction = 0.15;
  int ab_epochs = 0, ab_max_scenes = 0;
  ablate->add_option("--corpus", ab_corpus, "training corpus")->required();
  ablate->add_option("--config", ab_config, "run config file");
  ablate->add_option("--variants", ab_variants, "comma-separated variant names");
  ablate->add_option("--seeds", ab_seeds, "comma-separated seeds");
  ablate->add_option("--out-prefix", ab_out, "write <prefix>.{txt,csv,json}");
  ablate->add_option("--eval-fraction", ab_eval_fraction, "held-out tail fraction");
  ablate->add_option("--epochs", ab_epochs, "epoch override (0 keeps config)");
  ablate->add_option("--max-scenes", ab_max_scenes, "cap on corpus size");

  // robustness
  auto* robust = app.add_subcommand("robustness", "clean vs noise vs delay evaluation");
  std::string rob_ckpt, rob_infra, rob_corpus, rob_config, rob_report;
  double rob_noise = 0.2, rob_delay = 0.5;
  int rob_max_scenes = 0;
  robust->add_option("--ckpt", rob_ckpt, "model checkpoint")->required();
  robust->add_option("--infra-ckpt", rob_infra, "stage-1 checkpoint for future-fusion variants");
  robust->add_option("--corpus", rob_corpus, "evaluation corpus")->required();
  robust->add_option("--config", rob_config, "run config file");
  robust->add_option("--noise", rob_noise, "noise std for the noise condition (m)");
  robust->add_option("--delay", rob_delay, "delay for the delay condition (s)");
  robust->add_option("--report", rob_report, "JSON output path");
  robust->add_option("--max-scenes", rob_max_scenes, "cap on corpus size");

  // render
  auto* render = app.add_subcommand("render", "draw a scene (and predictions) to PPM");
  std::string ren_corpus, ren_scene_id, ren_ckpt, ren_infra, ren_out = "scene.ppm", ren_config;
  int ren_index = 0, ren_width = 900, ren_height = 900;
  render->add_option("--corpus", ren_corpus, "corpus holding the scene")->required();
  render->add_option("--index", ren_index, "scene index in the corpus");
  render->add_option("--scene-id", ren_scene_id, "scene id (overrides --index)");
  render->add_option("--ckpt", ren_ckpt, "optional checkpoint for predictions");
  render->add_option("--infra-ckpt", ren_infra, "stage-1 checkpoint for future-fusion variants");
  render->add_option("--config", ren_config, "run config file");
  render->add_option("--out", ren_out, "output PPM path");
  render->add_option("--width", ren_width, "image width in pixels");
  render->add_option("--height", ren_height, "image height in pixels");

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed())
      return cmd_generate(gen_out, gen_count, gen_seed, gen_template, gen_min_agents,
                          gen_max_agents, gen_occlusion);
    if (train->parsed())
      return cmd_train(train_config, train_corpus, train_out, train_variant_opt, train_seed,
                       train_epochs, train_max_scenes);
    if (eval->parsed())
      return cmd_eval(eval_ckpt, eval_infra, eval_corpus, eval_config, eval_report, eval_csv,
                      eval_noise, eval_delay, eval_max_scenes);
    if (ablate->parsed())
      return cmd_ablate(ab_corpus, ab_config, ab_variants, ab_seeds, ab_out, ab_eval_fraction,
                        ab_epochs, ab_max_scenes);
    if (robust->parsed())
      return cmd_robustness(rob_ckpt, rob_infra, rob_corpus, rob_config, rob_noise, rob_delay,
                            rob_report, rob_max_scenes);
    if (render->parsed())
      return cmd_render(ren_corpus, ren_index, ren_scene_id, ren_ckpt, ren_infra, ren_out,
                        ren_width, ren_height, ren_config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
