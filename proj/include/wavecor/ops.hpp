#pragma once

#include <array>
#include <vector>

#include "wavecor/autograd.hpp"

WAVECOR_BEGIN_NAMESPACE

struct Conv3dOptions {
  std::array<Index, 3> stride{1, 1, 1};
  std::array<Index, 3> padding{0, 0, 0};
  Index groups = 1;
};

/// 3D cross-correlation with zero padding. `weight` is
/// (Cout, Cin/groups, kd, kh, kw); `bias` may be an empty Var.
Var conv3d(Graph& g, const Var& x, const Var& weight, const Var& bias,
           const Conv3dOptions& opt = {});

/// Output extent along one axis; throws DimensionError if non-positive.
Index conv_output_size(Index in, Index kernel, Index stride, Index pad, int axis);

struct BatchNormState {
  Tensor* running_mean = nullptr;
  Tensor* running_var = nullptr;
  double momentum = 0.1;
  double eps = 1e-5;
};

/// Per-channel normalization. Training mode uses batch statistics over
/// (B, D, H, W) and updates the running estimates (unbiased variance);
/// evaluation mode uses the running estimates.
Var batch_norm(Graph& g, const Var& x, const Var& gamma, const Var& beta,
               const BatchNormState& state, bool training);

Var relu(Graph& g, const Var& x);
Var sigmoid(Graph& g, const Var& x);

/// 2x2x2 max pooling with stride 2. Gradient goes to the block argmax; ties
/// resolve to the lowest linear index inside the block.
Var max_pool3d(Graph& g, const Var& x);

/// Mean over (D, H, W) -> (B, C, 1, 1, 1).
Var global_avg_pool(Graph& g, const Var& x);

/// Mean and max across channels -> (B, 1, D, H, W). Max ties go to the lowest
/// channel.
Var channel_mean(Graph& g, const Var& x);
Var channel_max(Graph& g, const Var& x);

/// Factor-2 trilinear upsampling with half-pixel centers (align_corners =
/// false); source coordinates are clamped at the borders.
Var trilinear_upsample(Graph& g, const Var& x);

Var concat_channels(Graph& g, const std::vector<Var>& parts);
Var add(Graph& g, const Var& a, const Var& b);
/// a * b where every axis of b is either 1 or equal to a's.
Var mul(Graph& g, const Var& a, const Var& b);
/// x * s for a one-element s.
Var scale(Graph& g, const Var& x, const Var& s);
/// alpha * a + (1 - alpha) * b for a one-element alpha.
Var lerp(Graph& g, const Var& a, const Var& b, const Var& alpha);
/// Sum of all elements -> shape {1}.
Var sum(Graph& g, const Var& x);
/// wa * a + wb * b for scalars a, b.
Var combine(Graph& g, const Var& a, double wa, const Var& b, double wb);

WAVECOR_END_NAMESPACE
