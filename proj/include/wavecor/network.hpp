#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "wavecor/blocks.hpp"

WAVECOR_BEGIN_NAMESPACE

struct NetworkConfig {
  Index base_width = 8;
  int scales = 4;
  bool use_mpe = true;
  bool use_rfe = true;
  bool use_msff = true;
  bool use_wt_iwt = true;
  double scale_init = 0.1;
  double alpha_init = 0.5;
  Index in_channels = 1;
  Index out_channels = 1;
  Index fused_channels = 8;
  std::string wavelet = "haar";

  /// Channel width of stage i (1-based): C * 2^(i-1).
  Index width(int stage) const { return base_width << (stage - 1); }
  std::vector<Index> widths() const;

  /// Throws ConfigError on invalid fields.
  void validate() const;
  /// Throws ConfigError unless every spatial extent is divisible by 2^scales.
  void validate_input(const std::array<Index, 3>& spatial) const;

  /// Toggle-pattern tag: Baseline, E1..E4, Full, or Custom.
  std::string variant() const;
  bool operator==(const NetworkConfig&) const = default;
};

/// The six toggle combinations, in report order: Baseline, E1 (MPE),
/// E2 (RFE), E3 (MSFF), E4 (WT/IWT), Full.
const std::vector<std::string>& variant_names();
NetworkConfig make_variant(const std::string& name, NetworkConfig base = {});

struct NetworkTrace {
  std::vector<Tensor> priors;     // M_1..M_S
  std::vector<Tensor> skips;      // SK_1..SK_S
  std::vector<Tensor> subbands;   // W_1..W_S (empty without the wavelet path)
  std::vector<Tensor> attention;  // a_k per stage (empty without the wavelet path)
  std::vector<Tensor> down;       // stage inputs after downsampling and prior fusion
  Tensor bottleneck;
  std::vector<Tensor> decoder;    // DF_1..DF_S
  MsffTrace msff;
};

class Network {
 public:
  Network(const NetworkConfig& cfg, std::uint64_t seed);

  /// Logits (B, 1, D, H, W). `prior` is the binary prior (B, 1, D, H, W);
  /// it is ignored when the prior path is off and may then be empty.
  Var forward(Graph& g, const Tensor& volume, const Tensor& prior, Mode mode,
              NetworkTrace* trace = nullptr) const;

  const NetworkConfig& config() const noexcept { return cfg_; }
  std::uint64_t seed() const noexcept { return seed_; }
  ParameterStore& store() noexcept { return store_; }
  const ParameterStore& store() const noexcept { return store_; }
  Index parameter_count() const { return store_.parameter_count(); }

  const PriorProjector* prior_projector() const { return mpe_ ? &*mpe_ : nullptr; }
  const WaveletUpsample* upsampler(int stage) const;
  const WaveletDownsample* downsampler(int stage) const;
  const ResidualFeatureEncoder* encoder_rfe(int stage) const;
  const ResidualFeatureEncoder* bottleneck_rfe() const;
  const MultiScaleFusion* msff() const { return msff_ ? &*msff_ : nullptr; }
  const DecoderStage& decoder(int stage) const { return decoders_.at(static_cast<size_t>(stage - 1)); }

 private:
  NetworkConfig cfg_;
  std::uint64_t seed_;
  ParameterStore store_;

  std::optional<ConvBnRelu> stem_;
  std::optional<PriorProjector> mpe_;
  std::vector<ResidualFeatureEncoder> enc_rfe_;
  std::vector<DoubleConv> enc_plain_;
  std::vector<WaveletDownsample> down_;
  std::optional<ResidualFeatureEncoder> bottleneck_rfe_;
  std::optional<DoubleConv> bottleneck_plain_;
  std::vector<WaveletUpsample> up_wavelet_;
  std::vector<InterpUpsample> up_interp_;
  std::vector<DecoderStage> decoders_;
  std::optional<MultiScaleFusion> msff_;
  std::optional<Conv3d> head_;
};

WAVECOR_END_NAMESPACE
