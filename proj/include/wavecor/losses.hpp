#pragma once

#include "wavecor/autograd.hpp"
#include "wavecor/mask.hpp"

WAVECOR_BEGIN_NAMESPACE

struct LossConfig {
  double lambda = 0.5;      // weight of the Dice term
  double dice_eps = 1e-5;   // smoothing in numerator and denominator

  void validate() const;
};

/// Soft Dice on sigmoid(logits), summed over the whole tensor:
/// 1 - (2 sum(p t) + eps) / (sum(p) + sum(t) + eps).
Var dice_loss(Graph& g, const Var& logits, const Tensor& target, double eps = 1e-5);

/// Mean binary cross-entropy in the stable logit form
/// max(z, 0) - z t + log(1 + exp(-|z|)).
Var bce_loss(Graph& g, const Var& logits, const Tensor& target);

/// lambda * dice + (1 - lambda) * bce.
Var total_loss(Graph& g, const Var& logits, const Tensor& target, const LossConfig& cfg = {});

/// Mask as a (1, 1, D, H, W) tensor of zeros and ones.
Tensor mask_to_tensor(const BinaryMask3& m);
/// Voxels with logit > 0 (sigmoid > 0.5). Expects (1, 1, D, H, W).
BinaryMask3 threshold_logits(const Tensor& logits, const Spacing& spacing);

WAVECOR_END_NAMESPACE
