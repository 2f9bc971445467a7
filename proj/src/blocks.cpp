#include "wavecor/blocks.hpp"

#include <cmath>

#include "wavecor/errors.hpp"

WAVECOR_BEGIN_NAMESPACE

namespace {

void require_channels(const Var& x, Index c, const std::string& what) {
  if (x.value().rank() != 5 || x.dim(1) != c) {
    throw DimensionError(what + ": expected " + std::to_string(c) + " channels on axis 1, got " +
                         shape_string(x.shape()));
  }
}

}  // namespace

PriorProjector::PriorProjector(ParameterStore& store, const std::string& name, Index in_channels,
                               const std::vector<Index>& widths, double scale_init) {
  Index prev = in_channels;
  for (size_t i = 0; i < widths.size(); ++i) {
    convs_.emplace_back(store, name + ".proj" + std::to_string(i + 1),
                        ConvSpec{prev, widths[i], 1, 1, false});
    prev = widths[i];
  }
  scale_ = &store.add(name + ".scale", Tensor::scalar(static_cast<Real>(scale_init)));
}

Var PriorProjector::project(Graph& g, const Var& m_prev, int stage) const {
  if (stage < 1 || stage > stages()) {
    throw UsageError("prior_project: stage " + std::to_string(stage) + " out of range");
  }
  const Conv3d& conv = convs_[static_cast<size_t>(stage - 1)];
  require_channels(m_prev, conv.spec().in, "prior_project stage " + std::to_string(stage));
  return max_pool3d(g, wavecor::scale(g, conv.forward(g, m_prev), scale_->var()));
}

std::vector<Var> PriorProjector::pyramid(Graph& g, const Var& mask) const {
  std::vector<Var> out;
  Var m = mask;
  for (int s = 1; s <= stages(); ++s) {
    m = project(g, m, s);
    out.push_back(m);
  }
  return out;
}

ResidualFeatureEncoder::ResidualFeatureEncoder(ParameterStore& store, const std::string& name,
                                               Index in, Index out)
    : body_(store, name + ".body", in, out),
      channel_(store, name + ".channel_gate", ConvSpec{out, out, 1, 1, true}),
      spatial_(store, name + ".spatial_gate", ConvSpec{2, 1, 7, 1, true}) {
  if (in != out) skip_.emplace(store, name + ".skip", ConvSpec{in, out, 1, 1, false});
}

Var ResidualFeatureEncoder::forward(Graph& g, const Var& x, Mode mode, RfeTrace* trace) const {
  const Var f = body_.forward(g, x, mode);
  const Var r = add(g, f, skip_ ? skip_->forward(g, x) : x);
  const Var g_ch = sigmoid(g, channel_.forward(g, global_avg_pool(g, r)));
  const Var pooled = concat_channels(g, {channel_mean(g, r), channel_max(g, r)});
  const Var g_sp = sigmoid(g, spatial_.forward(g, pooled));
  if (trace) {
    trace->residual = r.value();
    trace->channel_gate = g_ch.value();
    trace->spatial_gate = g_sp.value();
  }
  return add(g, mul(g, r, g_ch), mul(g, r, g_sp));
}

WaveletDownsample::WaveletDownsample(ParameterStore& store, const std::string& name, Index channels)
    : refine_(store, name + ".group_conv",
              ConvSpec{kSubbands * channels, kSubbands * channels, 3, kSubbands, false}),
      bn_(store, name + ".bn", kSubbands * channels),
      attention_(store, name + ".attention", ConvSpec{kSubbands * channels, kSubbands, 1, kSubbands, true}) {}

EncoderStageOutput WaveletDownsample::forward(Graph& g, const Var& r_out, Mode mode) const {
  require_channels(r_out, refine_.spec().in / kSubbands, "wavelet_downsample");
  EncoderStageOutput out;
  out.skip = r_out;
  out.subbands = dwt3(g, r_out);
  const Var flat = subbands_to_channels(g, out.subbands);
  const Var refined = relu(g, bn_.forward(g, refine_.forward(g, flat), mode));
  out.attention = sigmoid(g, attention_.forward(g, global_avg_pool(g, refined)));
  out.down = subband_weighted_sum(g, refined, out.attention);
  return out;
}

WaveletUpsample::WaveletUpsample(ParameterStore& store, const std::string& name, Index in, Index out,
                                 double alpha_init)
    : out_(out), proj_(store, name + ".subband_proj", ConvSpec{in, kSubbands * out, 1, 1, true}) {
  if (!(alpha_init > 0.0 && alpha_init < 1.0)) {
    throw ConfigError("alpha_init must lie strictly inside (0, 1)");
  }
  alpha_ = &store.add(name + ".alpha",
                      Tensor::scalar(static_cast<Real>(std::log(alpha_init / (1.0 - alpha_init)))));
}

double WaveletUpsample::alpha() const {
  return 1.0 / (1.0 + std::exp(-static_cast<double>(alpha_->value()[0])));
}

Var WaveletUpsample::forward(Graph& g, const Var& x_deep, const Var& w_skip) const {
  require_channels(x_deep, proj_.spec().in, "iwt_upsample input");
  const Shape& ws = w_skip.shape();
  if (ws.size() != 6 || ws[1] != out_ || ws[2] != kSubbands || ws[0] != x_deep.dim(0) ||
      ws[3] != x_deep.dim(2) || ws[4] != x_deep.dim(3) || ws[5] != x_deep.dim(4)) {
    throw DimensionError("iwt_upsample: skip subbands " + shape_string(ws) +
                         " do not match deep feature " + shape_string(x_deep.shape()) +
                         " with " + std::to_string(out_) + " output channels");
  }
  const Var s_pred = channels_to_subbands(g, proj_.forward(g, x_deep));
  const Var alpha = sigmoid(g, alpha_->var());
  return iwt3(g, lerp(g, s_pred, w_skip, alpha));
}

InterpUpsample::InterpUpsample(ParameterStore& store, const std::string& name, Index in, Index out)
    : proj_(store, name + ".proj", ConvSpec{in, out, 1, 1, true}) {}

Var InterpUpsample::forward(Graph& g, const Var& x_deep) const {
  return proj_.forward(g, trilinear_upsample(g, x_deep));
}

DecoderStage::DecoderStage(ParameterStore& store, const std::string& name, Index width)
    : width_(width), refine_(store, name + ".refine", 2 * width, width) {}

Var DecoderStage::forward(Graph& g, const Var& y, const Var& skip, Mode mode) const {
  require_channels(y, width_, "decoder_stage upsampled input");
  require_channels(skip, width_, "decoder_stage skip");
  return refine_.forward(g, concat_channels(g, {y, skip}), mode);
}

MultiScaleFusion::MultiScaleFusion(ParameterStore& store, const std::string& name,
                                   const std::vector<Index>& widths, Index fused_channels,
                                   Index out_channels)
    : widths_(widths),
      head_(store, name + ".head", ConvSpec{fused_channels, out_channels, 1, 1, true}) {
  const Index f = fused_channels;
  for (size_t i = 0; i < widths.size(); ++i) {
    const std::string s = std::to_string(i + 1);
    compress_.emplace_back(store, name + ".compress" + s, ConvSpec{widths[i], f, 1, 1, true});
    if (i + 1 < widths.size()) {
      gate_.emplace_back(store, name + ".gate" + s, ConvSpec{2 * f, f, 1, 1, true});
      refine_.emplace_back(store, name + ".refine" + s, ConvSpec{f, f, 3, 1, true});
    }
  }
}

Var MultiScaleFusion::forward(Graph& g, const std::vector<Var>& df, MsffTrace* trace) const {
  const size_t S = widths_.size();
  if (df.size() != S) {
    throw DimensionError("msff: expected " + std::to_string(S) + " decoder features, got " +
                         std::to_string(df.size()));
  }
  std::vector<Var> comp(S);
  for (size_t i = 0; i < S; ++i) {
    require_channels(df[i], widths_[i], "msff DF_" + std::to_string(i + 1));
    comp[i] = compress_[i].forward(g, df[i]);
  }
  std::vector<Var> fused(S), gates(S > 0 ? S - 1 : 0);
  fused[S - 1] = comp[S - 1];
  for (size_t i = S - 1; i-- > 0;) {
    const Var up = trilinear_upsample(g, fused[i + 1]);
    if (up.shape() != comp[i].shape()) {
      throw DimensionError("msff: upsampled " + shape_string(up.shape()) + " does not match DF_" +
                           std::to_string(i + 1) + " compressed " + shape_string(comp[i].shape()));
    }
    gates[i] = sigmoid(g, gate_[i].forward(g, concat_channels(g, {up, comp[i]})));
    fused[i] = refine_[i].forward(g, mul(g, comp[i], gates[i]));
  }
  if (trace) {
    trace->compressed.clear();
    trace->gates.clear();
    trace->fused.clear();
    for (const auto& v : comp) trace->compressed.push_back(v.value());
    for (const auto& v : gates) trace->gates.push_back(v.value());
    for (const auto& v : fused) trace->fused.push_back(v.value());
  }
  return head_.forward(g, fused[0]);
}

WAVECOR_END_NAMESPACE
