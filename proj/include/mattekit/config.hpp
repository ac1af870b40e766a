#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mattekit/dgm.hpp"
#include "mattekit/losses.hpp"
#include "mattekit/net.hpp"

namespace mattekit {

struct DatasetConfig {
  std::string manifest;  // when empty, a dataset is synthesized under the run dir
  int num_fg = 16;
  int bgs_per_fg = 4;
  int size = 64;
  int trimap_kernel_min = 3;
  int trimap_kernel_max = 9;
};

struct OptimizerConfig {
  double lr_init = 0.001;
  std::vector<std::pair<int, double>> lr_drops{{30, 0.0001}, {40, 0.00001}};
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct TrainConfig {
  int epochs = 25;
  int batch_size = 4;
  uint64_t seed = 1;
  std::string out_dir = "out";
  bool dual_supervision = true;  // supervise preliminary and refined heads equally
  std::vector<int> crop_sizes{64, 96, 128};
  int resolution = 64;
  int checkpoint_every = 1;  // epochs
};

// Full run description; (config, seed) determines every byte of the run.
struct ExperimentConfig {
  DatasetConfig dataset;
  NetConfig net;
  DgmConfig dgm;
  LossConfig loss;
  OptimizerConfig optimizer;
  TrainConfig train;

  void validate() const;
};

// Flat `section.key = value` text: '#' comments, blank lines ignored.
// Lists are comma separated; lr_drops are `epoch:lr` pairs.
ExperimentConfig load_config(const std::string& path);
void apply_override(ExperimentConfig& cfg, const std::string& key_value);  // "key=value"
std::string dump_config(const ExperimentConfig& cfg);

}  // namespace mattekit
