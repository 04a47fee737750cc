#include "coopred/io/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace coopred {

namespace {

constexpr char kMagic[8] = {'C', 'O', 'P', 'R', 'C', 'K', 'P', '1'};

template <typename V>
void put(std::ofstream& out, const V& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(V));
}

template <typename V>
V get(std::ifstream& in) {
  V v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(V));
  if (!in) throw std::runtime_error("checkpoint: truncated file");
  return v;
}

void put_string(std::ofstream& out, const std::string& s) {
  put(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::ifstream& in) {
  const auto n = get<std::uint32_t>(in);
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (!in) throw std::runtime_error("checkpoint: truncated string");
  return s;
}

void put_tensor(std::ofstream& out, const nn::Tensor<float>& t) {
  put(out, t.rows);
  put(out, t.cols);
  out.write(reinterpret_cast<const char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(float)));
}

void get_tensor_into(std::ifstream& in, nn::Tensor<float>& t, const std::string& name) {
  const int rows = get<int>(in);
  const int cols = get<int>(in);
  if (rows != t.rows || cols != t.cols)
    throw std::runtime_error("checkpoint: shape mismatch for " + name + ": file has " +
                             std::to_string(rows) + "x" + std::to_string(cols) + ", model has " +
                             std::to_string(t.rows) + "x" + std::to_string(t.cols));
  in.read(reinterpret_cast<char*>(t.data.data()),
          static_cast<std::streamsize>(t.data.size() * sizeof(float)));
  if (!in) throw std::runtime_error("checkpoint: truncated tensor " + name);
}

void put_meta(std::ofstream& out, const CheckpointMeta& meta) {
  out.write(kMagic, sizeof(kMagic));
  const ModelConfig& m = meta.model;
  put(out, m.hidden_dim);
  put(out, m.heads);
  put(out, m.layers);
  put(out, m.temporal_layers);
  put(out, m.modes);
  put(out, m.history_steps);
  put(out, m.future_steps);
  put(out, m.ffn_mult);
  put(out, m.conv_channels);
  put(out, m.pos_scale);
  put_string(out, meta.variant);
  put(out, meta.epoch);
  put(out, meta.adam_step);
  put(out, static_cast<std::uint64_t>(meta.metric_history.size()));
  for (double v : meta.metric_history) put(out, v);
}

CheckpointMeta get_meta(std::ifstream& in) {
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("checkpoint: bad magic or version");
  CheckpointMeta meta;
  ModelConfig& m = meta.model;
  m.hidden_dim = get<int>(in);
  m.heads = get<int>(in);
  m.layers = get<int>(in);
  m.temporal_layers = get<int>(in);
  m.modes = get<int>(in);
  m.history_steps = get<int>(in);
  m.future_steps = get<int>(in);
  m.ffn_mult = get<int>(in);
  m.conv_channels = get<int>(in);
  m.pos_scale = get<double>(in);
  meta.variant = get_string(in);
  meta.epoch = get<int>(in);
  meta.adam_step = get<std::int64_t>(in);
  const auto n = get<std::uint64_t>(in);
  meta.metric_history.resize(n);
  for (auto& v : meta.metric_history) v = get<double>(in);
  return meta;
}

}  // namespace

void save_checkpoint(const std::string& path, const nn::ParamStore<float>& store,
                     const CheckpointMeta& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot open for writing: " + path);
  put_meta(out, meta);
  put(out, static_cast<std::uint64_t>(store.names().size()));
  for (const auto& name : store.names()) {
    const auto& e = store.entry(name);
    put_string(out, name);
    put_tensor(out, e.value);
    put_tensor(out, e.m);
    put_tensor(out, e.v);
  }
  if (!out) throw std::runtime_error("checkpoint: write failed: " + path);
}

CheckpointMeta load_checkpoint(const std::string& path, nn::ParamStore<float>& store) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open: " + path);
  CheckpointMeta meta = get_meta(in);
  const auto count = get<std::uint64_t>(in);
  if (count != store.names().size())
    throw std::runtime_error("checkpoint: parameter count mismatch: file has " +
                             std::to_string(count) + ", model has " +
                             std::to_string(store.names().size()));
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::string name = get_string(in);
    if (!store.has(name)) throw std::runtime_error("checkpoint: unknown parameter " + name);
    auto& e = store.entry(name);
    get_tensor_into(in, e.value, name);
    get_tensor_into(in, e.m, name);
    get_tensor_into(in, e.v, name);
  }
  return meta;
}

CheckpointMeta peek_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open: " + path);
  return get_meta(in);
}

}  // namespace coopred
