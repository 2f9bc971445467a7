#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "wavecor/losses.hpp"
#include "wavecor/metrics.hpp"
#include "wavecor/network.hpp"
#include "wavecor/optim.hpp"
#include "wavecor/patches.hpp"
#include "wavecor/phantom.hpp"

WAVECOR_BEGIN_NAMESPACE

struct PatchConfig {
  Dims3 size{32, 32, 32};
  Index overlap = 8;

  void validate() const;
};

struct TrainConfig {
  NetworkConfig network;
  LossConfig loss;
  OptimConfig optim;
  PatchConfig patch;
  std::uint64_t seed = 0;
  int prior_radius = 2;
  /// Random crops per training case and epoch; 0 trains on every grid patch.
  int patches_per_case = 1;
  bool augment = true;
  /// Worker threads for validation and evaluation; 0 = hardware concurrency.
  int threads = 1;

  void validate() const;
};

/// Network-ready case: min-max normalized intensity, binary prior, label.
struct Case {
  std::string id;
  Tensor volume;  // (1, 1, D, H, W) in [0, 1]
  Tensor prior;   // (1, 1, D, H, W) of 0/1
  BinaryMask3 label;
};

/// Per-volume min-max scaling to [0, 1]; a constant volume maps to zeros.
Tensor normalize_minmax(const Tensor& volume);
Case prepare_case(const std::string& id, const Tensor& intensity, const BinaryMask3& label,
                  const BinaryMask3& myocardium, int prior_radius);
Case prepare_case(const VolumeRecord& record, int prior_radius);

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double val_dsc = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  int best_epoch = -1;
  double best_val_dsc = 0.0;
  bool stopped_early = false;
  Index steps = 0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Epoch loop over shuffled training patches with cosine learning rate,
/// per-epoch validation DSC, early stopping, and best-weights retention: on
/// return `net` holds the parameters of the best validation epoch. Throws
/// TrainingError naming the first non-finite op if the loss is not finite.
TrainResult train(Network& net, const std::vector<Case>& train_cases, const std::vector<Case>& val_cases,
                  const TrainConfig& cfg, const EpochCallback& on_epoch = {});

/// Mean loss of one forward/backward step on the given patch, for probing.
double train_step(Network& net, Adam& opt, const Sample& s, const LossConfig& loss, double lr);

/// Sliding-window logits over the whole volume (evaluation mode).
Tensor predict_logits(const Network& net, const Tensor& volume, const Tensor& prior, const PatchConfig& patch);
BinaryMask3 predict_mask(const Network& net, const Case& c, const PatchConfig& patch);

SegMetrics evaluate_case(const Network& net, const Case& c, const PatchConfig& patch);
/// Per-case metrics in input order; `threads` workers split the cases.
std::vector<SegMetrics> evaluate_cases(const Network& net, const std::vector<Case>& cases,
                                       const PatchConfig& patch, int threads = 1);

struct AblationRow {
  std::string model;
  NetworkConfig config;
  Index parameters = 0;
  TrainResult training;
  MetricSummary test;
};

using AblationCallback = std::function<void(const std::string& model, const EpochRecord&)>;

/// Trains and evaluates the six toggle variants under identical seeds and data.
std::vector<AblationRow> ablate(const std::vector<Case>& train_cases, const std::vector<Case>& val_cases,
                                const std::vector<Case>& test_cases, const TrainConfig& base,
                                const AblationCallback& on_epoch = {});

/// Snapshot of every parameter and buffer value of a store.
std::vector<Tensor> snapshot(const ParameterStore& store);
void restore(ParameterStore& store, const std::vector<Tensor>& values);

WAVECOR_END_NAMESPACE
