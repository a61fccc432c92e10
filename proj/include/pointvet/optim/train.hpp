#pragma once

#include <vector>

#include "pointvet/core/dataset.hpp"
#include "pointvet/core/types.hpp"
#include "pointvet/optim/optim.hpp"
#include "pointvet/spawn/spawn.hpp"
#include "pointvet/vet/vet.hpp"

namespace pvet::optim {

struct TrainConfig {
  int epochs = 300;
  LossKind loss = LossKind::L1;
  AdamParams adam;
  bool lr_decay = true;  // halve learning rates at 60% and 80% of epochs
  int clean_every = 50;
  double clean_threshold = 0.3;
  double opacity_bias = 1e-7;
  double narrowing_factor = 0.01;
  int transition_epoch = -1;       // absolute epoch; negative disables
  std::vector<int> spawn_epochs;   // VET + spawn after these many epochs
  vet::ErrorMapConfig error_map;
  vet::ReconConfig recon;
  double inner_fraction = 0.95;    // scene bbox quantile mass
  spawn::SpawnConfig spawn;
  Vec3 background{0.0, 0.0, 0.0};
  int eval_every = 1;              // held-out PSNR cadence; <= 0 disables
  int threads = 1;
};

struct EpochLog {
  int epoch = 0;
  double loss = 0.0;
  double train_psnr = 0.0;
  double eval_psnr = 0.0;  // NaN on epochs where it was not computed
  size_t point_count = 0;
  double steepness = 1.0;
};

struct SpawnEvent {
  int epoch = 0;
  int generation = 0;
  size_t spawned = 0;
  ErrorVolume volume;
  PointCloud cloud_after;  // snapshot right after the spawn
};

struct TrainResult {
  PointCloud cloud;
  OptimState state;
  std::vector<EpochLog> log;
  std::vector<SpawnEvent> spawns;
};

// The outer loop: per epoch renders every training view, averages the
// per-point gradients over views, biases the opacity gradient, takes one Adam
// step, and runs cleaning / VET spawning / the opaque transition on schedule.
// The scene box for VET comes from the cloud passed in (the initial one).
// Raises NumericError when the loss stops being finite.
TrainResult train(const Dataset& dataset, PointCloud cloud, const TrainConfig& config);

// CSV rows for TrainResult::log ("epoch,loss,train_psnr,eval_psnr,points,steepness").
std::string log_to_csv(const std::vector<EpochLog>& log);

}  // namespace pvet::optim
