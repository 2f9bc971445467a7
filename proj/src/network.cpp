#include "wavecor/network.hpp"

#include <cmath>

#include "wavecor/errors.hpp"

WAVECOR_BEGIN_NAMESPACE

std::vector<Index> NetworkConfig::widths() const {
  std::vector<Index> w;
  for (int i = 1; i <= scales; ++i) w.push_back(width(i));
  return w;
}

void NetworkConfig::validate() const {
  if (base_width < 1) throw ConfigError("base_width must be >= 1");
  if (scales < 1 || scales > 6) throw ConfigError("scales must be in 1..6");
  if (in_channels != 1) throw ConfigError("in_channels must be 1");
  if (out_channels != 1) throw ConfigError("out_channels must be 1");
  if (fused_channels < 1) throw ConfigError("fused_channels must be >= 1");
  if (!std::isfinite(scale_init)) throw ConfigError("scale_init must be finite");
  if (!(alpha_init > 0.0 && alpha_init < 1.0)) {
    throw ConfigError("alpha_init must lie strictly inside (0, 1)");
  }
  if (wavelet != "haar") throw ConfigError("wavelet: only 'haar' is supported, got '" + wavelet + "'");
}

void NetworkConfig::validate_input(const std::array<Index, 3>& spatial) const {
  const Index m = Index{1} << scales;
  static const char* axes[3] = {"D", "H", "W"};
  for (int a = 0; a < 3; ++a) {
    if (spatial[static_cast<size_t>(a)] <= 0 || spatial[static_cast<size_t>(a)] % m != 0) {
      throw ConfigError(std::string("input axis ") + axes[a] + " = " +
                        std::to_string(spatial[static_cast<size_t>(a)]) +
                        " is not divisible by 2^scales = " + std::to_string(m));
    }
  }
}

const std::vector<std::string>& variant_names() {
  static const std::vector<std::string> names{"Baseline", "E1", "E2", "E3", "E4", "Full"};
  return names;
}

NetworkConfig make_variant(const std::string& name, NetworkConfig base) {
  base.use_mpe = name == "E1" || name == "Full";
  base.use_rfe = name == "E2" || name == "Full";
  base.use_msff = name == "E3" || name == "Full";
  base.use_wt_iwt = name == "E4" || name == "Full";
  if (name != "Baseline" && base.variant() != name) {
    throw ConfigError("unknown variant '" + name + "'");
  }
  return base;
}

std::string NetworkConfig::variant() const {
  const int n = int(use_mpe) + int(use_rfe) + int(use_msff) + int(use_wt_iwt);
  if (n == 0) return "Baseline";
  if (n == 4) return "Full";
  if (n == 1) {
    if (use_mpe) return "E1";
    if (use_rfe) return "E2";
    if (use_msff) return "E3";
    return "E4";
  }
  return "Custom";
}

Network::Network(const NetworkConfig& cfg, std::uint64_t seed) : cfg_(cfg), seed_(seed), store_(seed) {
  cfg_.validate();
  const int S = cfg_.scales;
  const Index C = cfg_.base_width;
  stem_.emplace(store_, "stem", cfg_.in_channels, C);
  if (cfg_.use_mpe) mpe_.emplace(store_, "mpe", cfg_.in_channels, cfg_.widths(), cfg_.scale_init);
  for (int i = 1; i <= S; ++i) {
    const std::string p = "enc" + std::to_string(i);
    const Index in = i == 1 ? C : cfg_.width(i - 1);
    if (cfg_.use_rfe) {
      enc_rfe_.emplace_back(store_, p + ".rfe", in, cfg_.width(i));
    } else {
      enc_plain_.emplace_back(store_, p + ".conv", in, cfg_.width(i));
    }
    if (cfg_.use_wt_iwt) down_.emplace_back(store_, p + ".down", cfg_.width(i));
  }
  if (cfg_.use_rfe) {
    bottleneck_rfe_.emplace(store_, "bottleneck.rfe", cfg_.width(S), cfg_.width(S));
  } else {
    bottleneck_plain_.emplace(store_, "bottleneck.conv", cfg_.width(S), cfg_.width(S));
  }
  for (int i = S; i >= 1; --i) {
    const std::string p = "dec" + std::to_string(i);
    const Index in = i == S ? cfg_.width(S) : cfg_.width(i + 1);
    if (cfg_.use_wt_iwt) {
      up_wavelet_.emplace_back(store_, p + ".up", in, cfg_.width(i), cfg_.alpha_init);
    } else {
      up_interp_.emplace_back(store_, p + ".up", in, cfg_.width(i));
    }
  }
  for (int i = 1; i <= S; ++i) decoders_.emplace_back(store_, "dec" + std::to_string(i), cfg_.width(i));
  if (cfg_.use_msff) {
    msff_.emplace(store_, "msff", cfg_.widths(), cfg_.fused_channels, cfg_.out_channels);
  } else {
    head_.emplace(store_, "head", ConvSpec{C, cfg_.out_channels, 1, 1, true});
  }
}

const WaveletUpsample* Network::upsampler(int stage) const {
  if (up_wavelet_.empty()) return nullptr;
  return &up_wavelet_.at(static_cast<size_t>(cfg_.scales - stage));
}

const WaveletDownsample* Network::downsampler(int stage) const {
  if (down_.empty()) return nullptr;
  return &down_.at(static_cast<size_t>(stage - 1));
}

const ResidualFeatureEncoder* Network::encoder_rfe(int stage) const {
  if (enc_rfe_.empty()) return nullptr;
  return &enc_rfe_.at(static_cast<size_t>(stage - 1));
}

const ResidualFeatureEncoder* Network::bottleneck_rfe() const {
  return bottleneck_rfe_ ? &*bottleneck_rfe_ : nullptr;
}

Var Network::forward(Graph& g, const Tensor& volume, const Tensor& prior, Mode mode,
                     NetworkTrace* trace) const {
  require_rank(volume, 5, "network input");
  if (volume.dim(1) != cfg_.in_channels) {
    throw DimensionError("network input: channel axis (axis 1) = " + std::to_string(volume.dim(1)) +
                         ", expected " + std::to_string(cfg_.in_channels));
  }
  cfg_.validate_input({volume.dim(2), volume.dim(3), volume.dim(4)});
  if (cfg_.use_mpe) {
    require_rank(prior, 5, "prior mask");
    const Shape want{volume.dim(0), 1, volume.dim(2), volume.dim(3), volume.dim(4)};
    if (prior.shape() != want) {
      throw DimensionError("prior mask shape " + shape_string(prior.shape()) + " must be " +
                           shape_string(want));
    }
  }
  const int S = cfg_.scales;
  if (trace) *trace = NetworkTrace{};

  Var x = stem_->forward(g, g.constant(volume, "volume"), mode);
  std::vector<Var> priors;
  if (mpe_) priors = mpe_->pyramid(g, g.constant(prior, "prior"));

  std::vector<Var> skips(static_cast<size_t>(S)), subbands(static_cast<size_t>(S));
  for (int i = 1; i <= S; ++i) {
    const size_t k = static_cast<size_t>(i - 1);
    const Var r = cfg_.use_rfe ? enc_rfe_[k].forward(g, x, mode) : enc_plain_[k].forward(g, x, mode);
    skips[k] = r;
    if (cfg_.use_wt_iwt) {
      EncoderStageOutput out = down_[k].forward(g, r, mode);
      subbands[k] = out.subbands;
      x = out.down;
      if (trace) {
        trace->subbands.push_back(out.subbands.value());
        trace->attention.push_back(out.attention.value());
      }
    } else {
      x = max_pool3d(g, r);
    }
    if (mpe_) x = add(g, x, priors[k]);
    if (trace) {
      trace->skips.push_back(r.value());
      trace->down.push_back(x.value());
      if (mpe_) trace->priors.push_back(priors[k].value());
    }
  }

  Var deep = bottleneck_rfe_ ? bottleneck_rfe_->forward(g, x, mode) : bottleneck_plain_->forward(g, x, mode);
  if (trace) trace->bottleneck = deep.value();

  std::vector<Var> df(static_cast<size_t>(S));
  for (int i = S; i >= 1; --i) {
    const size_t k = static_cast<size_t>(i - 1);
    const size_t u = static_cast<size_t>(S - i);
    const Var y = cfg_.use_wt_iwt ? up_wavelet_[u].forward(g, deep, subbands[k]) : up_interp_[u].forward(g, deep);
    df[k] = decoders_[k].forward(g, y, skips[k], mode);
    deep = df[k];
  }
  if (trace)
    for (const auto& v : df) trace->decoder.push_back(v.value());

  return msff_ ? msff_->forward(g, df, trace ? &trace->msff : nullptr) : head_->forward(g, df[0]);
}

WAVECOR_END_NAMESPACE
