#pragma once

#include <vector>

#include "wavecor/autograd.hpp"

WAVECOR_BEGIN_NAMESPACE

struct OptimConfig {
  double lr = 0.002;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int epochs = 60;
  int patience = 15;

  void validate() const;
};

/// Bias-corrected Adam over the trainable parameters handed in.
class Adam {
 public:
  Adam(std::vector<Parameter*> params, const OptimConfig& cfg);

  /// One update with learning rate `lr` from the current gradients.
  void step(double lr);
  Index steps() const noexcept { return t_; }

  const Tensor& first_moment(size_t i) const { return m_.at(i); }
  const Tensor& second_moment(size_t i) const { return v_.at(i); }
  size_t size() const noexcept { return params_.size(); }

 private:
  std::vector<Parameter*> params_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  double beta1_, beta2_, eps_;
  Index t_ = 0;
};

/// base * (1 + cos(pi * epoch / total)) / 2.
double cosine_lr(int epoch, int total_epochs, double base_lr);

/// Stops once the monitored score has failed to strictly improve for
/// `patience` consecutive epochs.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience) : patience_(patience) {}

  /// Records one epoch's score; returns true if training should stop.
  bool update(int epoch, double score);
  bool improved() const noexcept { return improved_; }
  int best_epoch() const noexcept { return best_epoch_; }
  double best_score() const noexcept { return best_; }
  int stale_epochs() const noexcept { return stale_; }

 private:
  int patience_;
  int best_epoch_ = -1;
  double best_ = 0.0;
  int stale_ = 0;
  bool improved_ = false;
};

WAVECOR_END_NAMESPACE
