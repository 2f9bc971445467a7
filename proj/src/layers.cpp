#include "wavecor/layers.hpp"

#include <cmath>
#include <random>

#include "wavecor/errors.hpp"

WAVECOR_BEGIN_NAMESPACE

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void ParameterStore::claim(const std::string& name) {
  if (names_.count(name)) throw UsageError("duplicate parameter name '" + name + "'");
  names_[name] = names_.size();
}

Parameter& ParameterStore::add(const std::string& name, Tensor init, bool trainable) {
  claim(name);
  params_.push_back(std::make_unique<Parameter>(name, std::move(init), trainable));
  return *params_.back();
}

Parameter& ParameterStore::add_kaiming(const std::string& name, Shape shape, Index fan_in) {
  std::mt19937_64 rng(mix64(seed_ ^ fnv1a64(name)));
  const double bound = std::sqrt(6.0 / static_cast<double>(std::max<Index>(fan_in, 1)));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t(std::move(shape));
  for (Real& v : t.values()) v = static_cast<Real>(dist(rng));
  return add(name, std::move(t));
}

Tensor& ParameterStore::add_buffer(const std::string& name, Tensor init) {
  claim(name);
  buffers_.emplace_back(name, std::make_unique<Tensor>(std::move(init)));
  return *buffers_.back().second;
}

Parameter* ParameterStore::find(const std::string& name) const {
  for (const auto& p : params_)
    if (p->name() == name) return p.get();
  return nullptr;
}

Tensor* ParameterStore::find_buffer(const std::string& name) const {
  for (const auto& [n, t] : buffers_)
    if (n == name) return t.get();
  return nullptr;
}

Index ParameterStore::parameter_count() const {
  Index n = 0;
  for (const auto& p : params_)
    if (p->trainable()) n += p->value().numel();
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p->zero_grad();
}

Conv3d::Conv3d(ParameterStore& store, const std::string& name, const ConvSpec& spec) : spec_(spec) {
  if (spec.in <= 0 || spec.out <= 0 || spec.kernel <= 0 || spec.groups <= 0) {
    throw ConfigError(name + ": convolution sizes must be positive");
  }
  if (spec.in % spec.groups != 0 || spec.out % spec.groups != 0) {
    throw ConfigError(name + ": channels not divisible by groups");
  }
  const Index k = spec.kernel;
  const Index cin_g = spec.in / spec.groups;
  weight_ = &store.add_kaiming(name + ".weight", {spec.out, cin_g, k, k, k}, cin_g * k * k * k);
  if (spec.bias) bias_ = &store.add(name + ".bias", Tensor::zeros({spec.out}));
}

Var Conv3d::forward(Graph& g, const Var& x) const {
  Conv3dOptions opt;
  const Index p = spec_.kernel / 2;
  opt.padding = {p, p, p};
  opt.groups = spec_.groups;
  return conv3d(g, x, weight_->var(), bias_ ? bias_->var() : Var(), opt);
}

BatchNorm3d::BatchNorm3d(ParameterStore& store, const std::string& name, Index channels) {
  gamma_ = &store.add(name + ".gamma", Tensor::ones({channels}));
  beta_ = &store.add(name + ".beta", Tensor::zeros({channels}));
  mean_ = &store.add_buffer(name + ".running_mean", Tensor::zeros({channels}));
  var_ = &store.add_buffer(name + ".running_var", Tensor::ones({channels}));
}

Var BatchNorm3d::forward(Graph& g, const Var& x, Mode mode) const {
  BatchNormState st;
  st.running_mean = mean_;
  st.running_var = var_;
  return batch_norm(g, x, gamma_->var(), beta_->var(), st, mode == Mode::kTrain);
}

ConvBnRelu::ConvBnRelu(ParameterStore& store, const std::string& name, Index in, Index out,
                       Index kernel, Index groups)
    : conv_(store, name + ".conv", ConvSpec{in, out, kernel, groups, false}),
      bn_(store, name + ".bn", out) {}

Var ConvBnRelu::forward(Graph& g, const Var& x, Mode mode) const {
  return relu(g, bn_.forward(g, conv_.forward(g, x), mode));
}

DoubleConv::DoubleConv(ParameterStore& store, const std::string& name, Index in, Index out)
    : a_(store, name + ".0", in, out), b_(store, name + ".1", out, out) {}

Var DoubleConv::forward(Graph& g, const Var& x, Mode mode) const {
  return b_.forward(g, a_.forward(g, x, mode), mode);
}

WAVECOR_END_NAMESPACE
