#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "coopred/model/config.hpp"
#include "coopred/nn/params.hpp"

namespace coopred {

/// Everything a resumed run needs besides the tensors themselves.
struct CheckpointMeta {
  ModelConfig model;
  std::string variant;
  int epoch = 0;
  std::int64_t adam_step = 0;
  std::vector<double> metric_history;  // training loss per epoch
};

/// Binary checkpoint: versioned header, config snapshot, then every parameter
/// with its Adam moments in creation order. Round trips are bitwise exact.
void save_checkpoint(const std::string& path, const nn::ParamStore<float>& store,
                     const CheckpointMeta& meta);

/// Loads into an existing store created from the same architecture. Unknown
/// names, missing names, or shape mismatches raise std::runtime_error naming
/// the offending parameter; a wrong magic/version raises too.
CheckpointMeta load_checkpoint(const std::string& path, nn::ParamStore<float>& store);

/// Reads only the metadata header.
CheckpointMeta peek_checkpoint(const std::string& path);

}  // namespace coopred
