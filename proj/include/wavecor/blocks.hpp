#pragma once

#include <optional>
#include <string>
#include <vector>

#include "wavecor/layers.hpp"
#include "wavecor/wavelet.hpp"

WAVECOR_BEGIN_NAMESPACE

/// Myocardial prior pyramid. Stage i projects M_{i-1} with a bias-free
/// 1x1x1 convolution to the stage width, multiplies by the shared learnable
/// Scale and max-pools by two.
class PriorProjector {
 public:
  /// `widths[i-1]` is the channel count of M_i; M_0 has `in_channels`.
  PriorProjector(ParameterStore& store, const std::string& name, Index in_channels,
                 const std::vector<Index>& widths, double scale_init);

  /// One stage, 1-based.
  Var project(Graph& g, const Var& m_prev, int stage) const;
  /// M_1..M_S.
  std::vector<Var> pyramid(Graph& g, const Var& mask) const;

  Parameter& scale() const { return *scale_; }
  const Conv3d& conv(int stage) const { return convs_.at(static_cast<size_t>(stage - 1)); }
  int stages() const noexcept { return static_cast<int>(convs_.size()); }

 private:
  std::vector<Conv3d> convs_;
  Parameter* scale_;
};

struct RfeTrace {
  Tensor residual;      // R = F(X) + skip(X)
  Tensor channel_gate;  // (B, C, 1, 1, 1)
  Tensor spatial_gate;  // (B, 1, D, H, W)
};

/// Residual double convolution with parallel channel and spatial gating:
/// out = g_ch * R + g_sp * R.
class ResidualFeatureEncoder {
 public:
  ResidualFeatureEncoder(ParameterStore& store, const std::string& name, Index in, Index out);

  Var forward(Graph& g, const Var& x, Mode mode, RfeTrace* trace = nullptr) const;

  const DoubleConv& body() const noexcept { return body_; }
  const std::optional<Conv3d>& projection() const noexcept { return skip_; }
  const Conv3d& channel_conv() const noexcept { return channel_; }
  const Conv3d& spatial_conv() const noexcept { return spatial_; }

 private:
  DoubleConv body_;
  std::optional<Conv3d> skip_;
  Conv3d channel_;
  Conv3d spatial_;
};

struct EncoderStageOutput {
  Var skip;      // SK_i, the stage feature before downsampling
  Var subbands;  // W_i = dwt3(SK_i); invalid when the wavelet path is off
  Var down;      // X_down at half resolution
  Var attention; // a_k, (B, 8, 1, 1, 1); invalid when the wavelet path is off
};

/// Wavelet-driven downsampling: decomposition, grouped refinement of the
/// flattened subbands, per-subband attention, weighted subband sum.
class WaveletDownsample {
 public:
  WaveletDownsample(ParameterStore& store, const std::string& name, Index channels);

  EncoderStageOutput forward(Graph& g, const Var& r_out, Mode mode) const;

  const Conv3d& group_conv() const noexcept { return refine_; }
  const BatchNorm3d& bn() const noexcept { return bn_; }
  const Conv3d& attention_conv() const noexcept { return attention_; }

 private:
  Conv3d refine_;
  BatchNorm3d bn_;
  Conv3d attention_;
};

/// Inverse-wavelet upsampling: predicted subbands from the deeper feature,
/// blended with the encoder subbands by alpha = sigmoid(raw), reconstructed.
class WaveletUpsample {
 public:
  WaveletUpsample(ParameterStore& store, const std::string& name, Index in, Index out,
                  double alpha_init);

  Var forward(Graph& g, const Var& x_deep, const Var& w_skip) const;

  const Conv3d& projection() const noexcept { return proj_; }
  Parameter& alpha_raw() const { return *alpha_; }
  double alpha() const;

 private:
  Index out_;
  Conv3d proj_;
  Parameter* alpha_;
};

/// Trilinear x2 followed by a 1x1x1 channel projection.
class InterpUpsample {
 public:
  InterpUpsample(ParameterStore& store, const std::string& name, Index in, Index out);
  Var forward(Graph& g, const Var& x_deep) const;

 private:
  Conv3d proj_;
};

/// concat(Y, SK_i) -> conv-BN-ReLU (2C -> C) -> conv-BN-ReLU (C -> C).
class DecoderStage {
 public:
  DecoderStage(ParameterStore& store, const std::string& name, Index width);
  Var forward(Graph& g, const Var& y, const Var& skip, Mode mode) const;
  const DoubleConv& refine() const noexcept { return refine_; }

 private:
  Index width_;
  DoubleConv refine_;
};

struct MsffTrace {
  std::vector<Tensor> compressed;  // DF_i^(1), i = 1..S
  std::vector<Tensor> gates;       // w_i, i = 1..S-1 (index i-1)
  std::vector<Tensor> fused;       // y_i, i = 1..S
};

/// Top-down fusion of decoder features. The deeper fused feature enters only
/// through the gate: y_i = conv3(w_i * DF_i^(1)),
/// w_i = sigmoid(conv1(concat(Up(y_{i+1}), DF_i^(1)))).
class MultiScaleFusion {
 public:
  MultiScaleFusion(ParameterStore& store, const std::string& name,
                   const std::vector<Index>& widths, Index fused_channels, Index out_channels);

  /// `df[i-1]` is DF_i.
  Var forward(Graph& g, const std::vector<Var>& df, MsffTrace* trace = nullptr) const;

  const Conv3d& compress(int stage) const { return compress_.at(static_cast<size_t>(stage - 1)); }
  const Conv3d& gate(int stage) const { return gate_.at(static_cast<size_t>(stage - 1)); }
  const Conv3d& refine(int stage) const { return refine_.at(static_cast<size_t>(stage - 1)); }
  const Conv3d& head() const noexcept { return head_; }

 private:
  std::vector<Index> widths_;
  std::vector<Conv3d> compress_;
  std::vector<Conv3d> gate_;
  std::vector<Conv3d> refine_;
  Conv3d head_;
};

WAVECOR_END_NAMESPACE
