#include "wavecor/optim.hpp"

#include <cmath>
#include <numbers>

#include "wavecor/errors.hpp"

WAVECOR_BEGIN_NAMESPACE

void OptimConfig::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("optim.lr must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("optim.beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("optim.beta2 must lie in [0, 1)");
  if (!(eps > 0.0)) throw ConfigError("optim.eps must be positive");
  if (epochs < 1) throw ConfigError("optim.epochs must be >= 1");
  if (patience < 1) throw ConfigError("optim.patience must be >= 1");
}

Adam::Adam(std::vector<Parameter*> params, const OptimConfig& cfg)
    : beta1_(cfg.beta1), beta2_(cfg.beta2), eps_(cfg.eps) {
  for (Parameter* p : params) {
    if (!p->trainable()) continue;
    params_.push_back(p);
    m_.emplace_back(p->value().shape());
    v_.emplace_back(p->value().shape());
  }
}

void Adam::step(double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (size_t k = 0; k < params_.size(); ++k) {
    Parameter& p = *params_[k];
    const Tensor& g = p.grad();
    Real* th = p.value().data();
    Real* m = m_[k].data();
    Real* v = v_[k].data();
    for (Index i = 0; i < g.numel(); ++i) {
      const double gi = g[i];
      const double mi = beta1_ * m[i] + (1.0 - beta1_) * gi;
      const double vi = beta2_ * v[i] + (1.0 - beta2_) * gi * gi;
      m[i] = static_cast<Real>(mi);
      v[i] = static_cast<Real>(vi);
      th[i] = static_cast<Real>(th[i] - lr * (mi / c1) / (std::sqrt(vi / c2) + eps_));
    }
  }
}

double cosine_lr(int epoch, int total_epochs, double base_lr) {
  if (total_epochs < 1 || epoch < 0 || epoch > total_epochs) {
    throw ConfigError("cosine_lr: epoch " + std::to_string(epoch) + " outside [0, " +
                      std::to_string(total_epochs) + "]");
  }
  return base_lr * 0.5 *
         (1.0 + std::cos(std::numbers::pi * static_cast<double>(epoch) / static_cast<double>(total_epochs)));
}

bool EarlyStopping::update(int epoch, double score) {
  improved_ = best_epoch_ < 0 || score > best_;
  if (improved_) {
    best_ = score;
    best_epoch_ = epoch;
    stale_ = 0;
  } else {
    ++stale_;
  }
  return stale_ >= patience_;
}

WAVECOR_END_NAMESPACE
