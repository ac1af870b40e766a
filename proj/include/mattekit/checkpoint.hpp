#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mattekit/net.hpp"

namespace mattekit {

// Training counters carried alongside the tensors.
struct CheckpointState {
  int64_t iteration = 0;
  int epoch = 0;
  int64_t adam_t = 0;
  double sigma2_current = 0.0;
};

struct Checkpoint {
  int version = 1;
  NetConfig net_config;
  std::vector<Parameter> tensors;  // net parameters first, then optimizer moments
  std::optional<CheckpointState> state;

  const Parameter* find(const std::string& name) const;
};

// File layout: u64 little-endian JSON header length, the JSON header
// (version, net_config, optional train_state, and one {name, shape, offset}
// record per tensor with offsets counted in doubles), then the flat
// little-endian double payload.
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace mattekit
