#include "coopred/harness/runconfig.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace coopred {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

int parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad integer for " + key + ": '" + value + "'");
  }
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad number for " + key + ": '" + value + "'");
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return static_cast<std::uint64_t>(v);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad seed for " + key + ": '" + value + "'");
  }
}

}  // namespace

ModelConfig RunConfig::model_config() const {
  ModelConfig m;
  m.hidden_dim = hidden_dim;
  m.heads = heads;
  m.layers = layers;
  m.temporal_layers = temporal_layers;
  m.modes = modes;
  m.history_steps = history_steps;
  m.future_steps = future_steps;
  m.ffn_mult = ffn_mult;
  m.conv_channels = conv_channels;
  m.pos_scale = pos_scale;
  return m;
}

GraphConfig RunConfig::graph_config() const {
  GraphConfig g = variant_by_name(variant).graph_config();
  g.max_in_edges = max_in_edges;
  g.map_radius_m = map_radius_m;
  g.segment_points = segment_points;
  return g;
}

void RunConfig::validate() const {
  variant_by_name(variant);  // throws on unknown name
  model_config().validate();
  if (downsample < 1) throw std::invalid_argument("config: downsample must be >= 1");
  if (lr <= 0.0 || weight_decay < 0.0)
    throw std::invalid_argument("config: lr must be positive and weight_decay nonnegative");
  if (lr_floor_frac < 0.0 || lr_floor_frac > 1.0)
    throw std::invalid_argument("config: lr_floor_frac must be in [0, 1]");
  if (epochs < 1 || batch_size < 1)
    throw std::invalid_argument("config: epochs and batch_size must be positive");
  if (noise_std < 0.0 || delay_s < 0.0)
    throw std::invalid_argument("config: noise_std and delay_s must be nonnegative");
  if (miss_threshold <= 0.0) throw std::invalid_argument("config: miss_threshold must be positive");
  if (max_in_edges < 1 || map_radius_m <= 0.0 || segment_points < 2)
    throw std::invalid_argument("config: bad graph limits");
  if (max_scenes < 0) throw std::invalid_argument("config: max_scenes must be nonnegative");
}

RunConfig parse_run_config(const std::string& text) {
  RunConfig c;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": empty key or value");

    if (key == "variant") c.variant = value;
    else if (key == "hidden_dim") c.hidden_dim = parse_int(key, value);
    else if (key == "heads") c.heads = parse_int(key, value);
    else if (key == "layers") c.layers = parse_int(key, value);
    else if (key == "temporal_layers") c.temporal_layers = parse_int(key, value);
    else if (key == "modes") c.modes = parse_int(key, value);
    else if (key == "ffn_mult") c.ffn_mult = parse_int(key, value);
    else if (key == "conv_channels") c.conv_channels = parse_int(key, value);
    else if (key == "downsample") c.downsample = parse_int(key, value);
    else if (key == "history_steps") c.history_steps = parse_int(key, value);
    else if (key == "future_steps") c.future_steps = parse_int(key, value);
    else if (key == "pos_scale") c.pos_scale = parse_double(key, value);
    else if (key == "lr") c.lr = parse_double(key, value);
    else if (key == "lr_floor_frac") c.lr_floor_frac = parse_double(key, value);
    else if (key == "weight_decay") c.weight_decay = parse_double(key, value);
    else if (key == "epochs") c.epochs = parse_int(key, value);
    else if (key == "batch_size") c.batch_size = parse_int(key, value);
    else if (key == "seed") c.seed = parse_u64(key, value);
    else if (key == "noise_std") c.noise_std = parse_double(key, value);
    else if (key == "delay_s") c.delay_s = parse_double(key, value);
    else if (key == "miss_threshold") c.miss_threshold = parse_double(key, value);
    else if (key == "max_in_edges") c.max_in_edges = parse_int(key, value);
    else if (key == "map_radius_m") c.map_radius_m = parse_double(key, value);
    else if (key == "segment_points") c.segment_points = parse_int(key, value);
    else if (key == "max_scenes") c.max_scenes = parse_int(key, value);
    else throw std::invalid_argument("config: unknown key '" + key + "'");
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str());
}

std::string to_text(const RunConfig& c) {
  std::ostringstream out;
  out.precision(17);
  out << "variant = " << c.variant << "\n"
      << "hidden_dim = " << c.hidden_dim << "\n"
      << "heads = " << c.heads << "\n"
      << "layers = " << c.layers << "\n"
      << "temporal_layers = " << c.temporal_layers << "\n"
      << "modes = " << c.modes << "\n"
      << "ffn_mult = " << c.ffn_mult << "\n"
      << "conv_channels = " << c.conv_channels << "\n"
      << "downsample = " << c.downsample << "\n"
      << "history_steps = " << c.history_steps << "\n"
      << "future_steps = " << c.future_steps << "\n"
      << "pos_scale = " << c.pos_scale << "\n"
      << "lr = " << c.lr << "\n"
      << "lr_floor_frac = " << c.lr_floor_frac << "\n"
      << "weight_decay = " << c.weight_decay << "\n"
      << "epochs = " << c.epochs << "\n"
      << "batch_size = " << c.batch_size << "\n"
      << "seed = " << c.seed << "\n"
      << "noise_std = " << c.noise_std << "\n"
      << "delay_s = " << c.delay_s << "\n"
      << "miss_threshold = " << c.miss_threshold << "\n"
      << "max_in_edges = " << c.max_in_edges << "\n"
      << "map_radius_m = " << c.map_radius_m << "\n"
      << "segment_points = " << c.segment_points << "\n"
      << "max_scenes = " << c.max_scenes << "\n";
  return out.str();
}

std::string output_dir(const std::string& fallback) {
  const char* env = std::getenv("COOPRED_OUT_DIR");
  if (env != nullptr && env[0] != '\0') return env;
  return fallback;
}

}  // namespace coopred
