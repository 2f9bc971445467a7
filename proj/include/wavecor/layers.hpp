#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "wavecor/ops.hpp"

WAVECOR_BEGIN_NAMESPACE

enum class Mode { kTrain, kEval };

/// Owns every parameter and non-trainable buffer of a model, in creation
/// order. Addresses stay valid for the store's lifetime.
///
/// Initial values depend only on (seed, name): each tensor draws from its own
/// generator, so disabling one module never shifts the weights of another.
class ParameterStore {
 public:
  explicit ParameterStore(std::uint64_t seed = 0) : seed_(seed) {}
  ParameterStore(const ParameterStore&) = delete;
  ParameterStore& operator=(const ParameterStore&) = delete;

  std::uint64_t seed() const noexcept { return seed_; }

  Parameter& add(const std::string& name, Tensor init, bool trainable = true);
  /// Kaiming-uniform tensor: U(-b, b) with b = sqrt(6 / fan_in).
  Parameter& add_kaiming(const std::string& name, Shape shape, Index fan_in);
  Tensor& add_buffer(const std::string& name, Tensor init);

  const std::vector<std::unique_ptr<Parameter>>& parameters() const noexcept { return params_; }
  const std::vector<std::pair<std::string, std::unique_ptr<Tensor>>>& buffers() const noexcept {
    return buffers_;
  }
  Parameter* find(const std::string& name) const;
  Tensor* find_buffer(const std::string& name) const;

  /// Number of trainable scalars.
  Index parameter_count() const;
  void zero_grad();

 private:
  void claim(const std::string& name);

  std::uint64_t seed_;
  std::vector<std::unique_ptr<Parameter>> params_;
  std::vector<std::pair<std::string, std::unique_ptr<Tensor>>> buffers_;
  std::map<std::string, size_t> names_;
};

struct ConvSpec {
  Index in = 1;
  Index out = 1;
  Index kernel = 3;
  Index groups = 1;
  bool bias = true;
};

/// Stride-1 convolution with "same" zero padding (kernel / 2).
class Conv3d {
 public:
  Conv3d(ParameterStore& store, const std::string& name, const ConvSpec& spec);

  Var forward(Graph& g, const Var& x) const;
  Parameter& weight() const { return *weight_; }
  Parameter* bias() const { return bias_; }
  const ConvSpec& spec() const noexcept { return spec_; }

 private:
  ConvSpec spec_;
  Parameter* weight_;
  Parameter* bias_ = nullptr;
};

class BatchNorm3d {
 public:
  BatchNorm3d(ParameterStore& store, const std::string& name, Index channels);

  Var forward(Graph& g, const Var& x, Mode mode) const;
  Parameter& gamma() const { return *gamma_; }
  Parameter& beta() const { return *beta_; }
  Tensor& running_mean() const { return *mean_; }
  Tensor& running_var() const { return *var_; }

 private:
  Parameter* gamma_;
  Parameter* beta_;
  Tensor* mean_;
  Tensor* var_;
};

/// Convolution, batch normalization, ReLU. The convolution has no bias since
/// BN removes it.
class ConvBnRelu {
 public:
  ConvBnRelu(ParameterStore& store, const std::string& name, Index in, Index out,
             Index kernel = 3, Index groups = 1);

  Var forward(Graph& g, const Var& x, Mode mode) const;
  const Conv3d& conv() const noexcept { return conv_; }
  const BatchNorm3d& bn() const noexcept { return bn_; }

 private:
  Conv3d conv_;
  BatchNorm3d bn_;
};

/// Two ConvBnRelu 3x3x3 layers.
class DoubleConv {
 public:
  DoubleConv(ParameterStore& store, const std::string& name, Index in, Index out);

  Var forward(Graph& g, const Var& x, Mode mode) const;
  const ConvBnRelu& first() const noexcept { return a_; }
  const ConvBnRelu& second() const noexcept { return b_; }

 private:
  ConvBnRelu a_;
  ConvBnRelu b_;
};

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);
/// 64-bit FNV-1a.
std::uint64_t fnv1a64(const std::string& s);

WAVECOR_END_NAMESPACE
