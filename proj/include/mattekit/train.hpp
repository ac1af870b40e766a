#pragma once

#include <string>
#include <vector>

#include "mattekit/adam.hpp"
#include "mattekit/checkpoint.hpp"
#include "mattekit/config.hpp"
#include "mattekit/metrics.hpp"
#include "mattekit/net.hpp"

namespace mattekit {

struct LoadedEntry {
  std::string id;
  Image fg;
  Image bg;
  AlphaMatte alpha;
  Trimap trimap;
  Image composite;  // float recomposition of the stored rasters
};

struct LoadedDataset {
  DatasetManifest manifest;
  std::vector<LoadedEntry> entries;
};

LoadedDataset load_dataset(const DatasetManifest& manifest);

struct TrainSummary {
  std::string run_dir;
  int64_t total_iterations = 0;
  double sad_initial = 0.0;  // mean Unknown-region SAD before the first update
  double sad_final = 0.0;
  MetricReport final_metrics;  // PNG-based evaluation of the refined outputs
  double wall_seconds = 0.0;
};

// Runs the full loop: per iteration sample -> augment -> forward ->
// response-weighted loss on both heads -> backward -> Adam. Writes
// out_dir/{config.snapshot, csv/loss.csv, checkpoints/, preds/, metrics.csv}.
// resume_checkpoint, when non-empty, restores parameters, moments and
// counters and continues the identical trajectory.
TrainSummary train(const ExperimentConfig& cfg, const std::string& resume_checkpoint = "");

// Single-image inference at full resolution (spatial size divisible by 16).
AlphaMatte infer(const MattingNet& net, const Image& image, const Trimap& trimap);

// Mean per-entry Unknown-region SAD of the refined head over the dataset,
// computed in memory (no quantization).
double mean_unknown_sad(const MattingNet& net, const LoadedDataset& data);

struct AblateVariant {
  std::string name;
  std::vector<std::string> overrides;  // loss.* / net.* keys only
};

struct AblateRun {
  std::string variant;
  uint64_t seed = 0;
  bool failed = false;
  std::string error;
  double sad_initial = 0.0;
  double sad_final = 0.0;
  MetricReport metrics;
};

struct AblateResult {
  std::vector<AblateRun> runs;
  std::string table;  // aligned text, one row per variant (median over seeds)
};

// One training run per (variant, seed) with a shared dataset and shared
// per-seed data order; failures are isolated per run. Writes ablation.csv
// and ablation.txt under out_dir.
AblateResult ablate(const ExperimentConfig& base, const std::vector<AblateVariant>& variants,
                    const std::vector<uint64_t>& seeds, const std::string& out_dir);

std::vector<AblateVariant> default_loss_variants();
std::vector<AblateVariant> default_module_variants();

}  // namespace mattekit
