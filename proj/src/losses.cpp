#include "wavecor/losses.hpp"

#include <cmath>

#include "wavecor/errors.hpp"
#include "wavecor/ops.hpp"

WAVECOR_BEGIN_NAMESPACE

namespace {

double sigmoid_d(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void require_target(const Var& logits, const Tensor& target, const char* what) {
  require_same_shape(logits.value(), target, what);
}

}  // namespace

void LossConfig::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("loss lambda must lie in [0, 1]");
  if (!(dice_eps > 0.0) || !std::isfinite(dice_eps)) throw ConfigError("dice_eps must be positive");
}

Var dice_loss(Graph& g, const Var& logits, const Tensor& target, double eps) {
  require_target(logits, target, "dice_loss");
  const Tensor& z = logits.value();
  const Index n = z.numel();
  double inter = 0.0, sp = 0.0, st = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double p = sigmoid_d(z[i]);
    inter += p * target[i];
    sp += p;
    st += target[i];
  }
  const double num = 2.0 * inter + eps;
  const double den = sp + st + eps;
  const double loss = 1.0 - num / den;
  return g.record("dice_loss", Tensor::scalar(static_cast<Real>(loss)), {logits},
                  [target, num, den](Node& self) {
                    Node& zn = *self.inputs[0];
                    Real* dz = zn.grad_ref().data();
                    const double go = self.grad[0];
                    const double inv = 1.0 / (den * den);
                    for (Index i = 0; i < zn.value.numel(); ++i) {
                      const double p = sigmoid_d(zn.value[i]);
                      const double dp = -(2.0 * target[i] * den - num) * inv;
                      dz[i] += static_cast<Real>(go * dp * p * (1.0 - p));
                    }
                  });
}

Var bce_loss(Graph& g, const Var& logits, const Tensor& target) {
  require_target(logits, target, "bce_loss");
  const Tensor& z = logits.value();
  const Index n = z.numel();
  double s = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double zi = z[i];
    s += std::max(zi, 0.0) - zi * target[i] + std::log1p(std::exp(-std::abs(zi)));
  }
  return g.record("bce_loss", Tensor::scalar(static_cast<Real>(s / static_cast<double>(n))), {logits},
                  [target](Node& self) {
                    Node& zn = *self.inputs[0];
                    Real* dz = zn.grad_ref().data();
                    const Index n = zn.value.numel();
                    const double scale = static_cast<double>(self.grad[0]) / static_cast<double>(n);
                    for (Index i = 0; i < n; ++i) {
                      dz[i] += static_cast<Real>(scale * (sigmoid_d(zn.value[i]) - target[i]));
                    }
                  });
}

Var total_loss(Graph& g, const Var& logits, const Tensor& target, const LossConfig& cfg) {
  cfg.validate();
  return combine(g, dice_loss(g, logits, target, cfg.dice_eps), cfg.lambda,
                 bce_loss(g, logits, target), 1.0 - cfg.lambda);
}

Tensor mask_to_tensor(const BinaryMask3& m) {
  Tensor t({1, 1, m.depth(), m.height(), m.width()});
  for (Index i = 0; i < m.size(); ++i) t[i] = m[i] ? Real(1) : Real(0);
  return t;
}

BinaryMask3 threshold_logits(const Tensor& logits, const Spacing& spacing) {
  require_rank(logits, 5, "threshold_logits");
  if (logits.dim(0) != 1 || logits.dim(1) != 1) {
    throw DimensionError("threshold_logits: expected (1, 1, D, H, W), got " + shape_string(logits.shape()));
  }
  BinaryMask3 m({logits.dim(2), logits.dim(3), logits.dim(4)}, spacing);
  for (Index i = 0; i < m.size(); ++i) m.set(i, logits[i] > Real(0));
  return m;
}

WAVECOR_END_NAMESPACE
