#include "wavecor/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "wavecor/errors.hpp"

WAVECOR_BEGIN_NAMESPACE

namespace {

void require_scalar(const Var& s, const char* what) {
  if (s.value().numel() != 1) {
    throw DimensionError(std::string(what) + ": expected a one-element tensor, got " +
                         shape_string(s.shape()));
  }
}

Real sigmoid_scalar(Real z) {
  if (z >= 0) return Real(1) / (Real(1) + std::exp(-z));
  const Real e = std::exp(z);
  return e / (Real(1) + e);
}

// One factor-2 half-pixel interpolation tap set along an axis of length n.
struct Taps {
  std::vector<Index> lo, hi;
  std::vector<Real> frac;
};

Taps make_taps(Index n) {
  Taps t;
  const Index m = 2 * n;
  t.lo.resize(m);
  t.hi.resize(m);
  t.frac.resize(m);
  for (Index j = 0; j < m; ++j) {
    double src = (static_cast<double>(j) + 0.5) / 2.0 - 0.5;
    if (src < 0) src = 0;
    const auto i0 = static_cast<Index>(std::floor(src));
    t.lo[j] = std::min(i0, n - 1);
    t.hi[j] = std::min(i0 + 1, n - 1);
    t.frac[j] = static_cast<Real>(src - static_cast<double>(i0));
  }
  return t;
}

// Treat `in` as (outer, n, inner) and upsample the middle axis by 2.
void upsample_axis(const Real* in, Real* out, Index outer, Index n, Index inner) {
  const Taps t = make_taps(n);
  for (Index o = 0; o < outer; ++o) {
    const Real* src = in + o * n * inner;
    Real* dst = out + o * 2 * n * inner;
    for (Index j = 0; j < 2 * n; ++j) {
      const Real* a = src + t.lo[j] * inner;
      const Real* b = src + t.hi[j] * inner;
      const Real f = t.frac[j];
      Real* d = dst + j * inner;
      for (Index i = 0; i < inner; ++i) d[i] = (Real(1) - f) * a[i] + f * b[i];
    }
  }
}

void upsample_axis_adjoint(const Real* gout, Real* gin, Index outer, Index n, Index inner) {
  const Taps t = make_taps(n);
  std::fill(gin, gin + outer * n * inner, Real(0));
  for (Index o = 0; o < outer; ++o) {
    const Real* src = gout + o * 2 * n * inner;
    Real* dst = gin + o * n * inner;
    for (Index j = 0; j < 2 * n; ++j) {
      Real* a = dst + t.lo[j] * inner;
      Real* b = dst + t.hi[j] * inner;
      const Real f = t.frac[j];
      const Real* s = src + j * inner;
      for (Index i = 0; i < inner; ++i) {
        a[i] += (Real(1) - f) * s[i];
        b[i] += f * s[i];
      }
    }
  }
}

}  // namespace

Var batch_norm(Graph& g, const Var& x, const Var& gamma, const Var& beta,
               const BatchNormState& state, bool training) {
  require_rank(x.value(), 5, "batch_norm input");
  const Index B = x.dim(0), C = x.dim(1), S = spatial_size(x.value());
  if (gamma.value().numel() != C || beta.value().numel() != C) {
    throw DimensionError("batch_norm: gamma/beta length " +
                         std::to_string(gamma.value().numel()) + " != channels (axis 1) " +
                         std::to_string(C));
  }
  if (!state.running_mean || !state.running_var || state.running_mean->numel() != C ||
      state.running_var->numel() != C) {
    throw DimensionError("batch_norm: running statistics must have length " + std::to_string(C));
  }
  const Index N = B * S;
  std::vector<Real> mean(C), inv_std(C);
  const Real* xd = x.value().data();
  for (Index c = 0; c < C; ++c) {
    if (training) {
      double s = 0.0;
      for (Index b = 0; b < B; ++b) {
        const Real* p = xd + (b * C + c) * S;
        for (Index i = 0; i < S; ++i) s += p[i];
      }
      const double mu = s / static_cast<double>(N);
      double ss = 0.0;
      for (Index b = 0; b < B; ++b) {
        const Real* p = xd + (b * C + c) * S;
        for (Index i = 0; i < S; ++i) {
          const double d = p[i] - mu;
          ss += d * d;
        }
      }
      const double var = ss / static_cast<double>(N);
      mean[c] = static_cast<Real>(mu);
      inv_std[c] = static_cast<Real>(1.0 / std::sqrt(var + state.eps));
      const double unbiased = N > 1 ? ss / static_cast<double>(N - 1) : var;
      Real& rm = (*state.running_mean)[c];
      Real& rv = (*state.running_var)[c];
      rm = static_cast<Real>((1.0 - state.momentum) * rm + state.momentum * mu);
      rv = static_cast<Real>((1.0 - state.momentum) * rv + state.momentum * unbiased);
    } else {
      mean[c] = (*state.running_mean)[c];
      inv_std[c] = static_cast<Real>(1.0 / std::sqrt(static_cast<double>((*state.running_var)[c]) + state.eps));
    }
  }
  Tensor xhat(x.shape());
  Tensor out(x.shape());
  const Real* gd = gamma.value().data();
  const Real* bd = beta.value().data();
  for (Index b = 0; b < B; ++b)
    for (Index c = 0; c < C; ++c) {
      const Index off = (b * C + c) * S;
      for (Index i = 0; i < S; ++i) {
        const Real h = (xd[off + i] - mean[c]) * inv_std[c];
        xhat[off + i] = h;
        out[off + i] = gd[c] * h + bd[c];
      }
    }
  return g.record(
      training ? "batch_norm[train]" : "batch_norm[eval]", std::move(out), {x, gamma, beta},
      [xhat = std::move(xhat), inv_std = std::move(inv_std), training, B, C, S](Node& self) {
        const Tensor& go = self.grad;
        Node& xn = *self.inputs[0];
        Node& gn = *self.inputs[1];
        Node& bn = *self.inputs[2];
        const Real* gam = gn.value.data();
        const double N = static_cast<double>(B * S);
        for (Index c = 0; c < C; ++c) {
          double sg = 0.0, sgh = 0.0;
          for (Index b = 0; b < B; ++b) {
            const Index off = (b * C + c) * S;
            for (Index i = 0; i < S; ++i) {
              sg += go[off + i];
              sgh += static_cast<double>(go[off + i]) * xhat[off + i];
            }
          }
          if (bn.requires_grad) bn.grad_ref()[c] += static_cast<Real>(sg);
          if (gn.requires_grad) gn.grad_ref()[c] += static_cast<Real>(sgh);
          if (!xn.requires_grad) continue;
          Real* dx = xn.grad_ref().data();
          const double k = static_cast<double>(gam[c]) * inv_std[c];
          for (Index b = 0; b < B; ++b) {
            const Index off = (b * C + c) * S;
            for (Index i = 0; i < S; ++i) {
              if (training) {
                dx[off + i] += static_cast<Real>(
                    k * (go[off + i] - sg / N - xhat[off + i] * sgh / N));
              } else {
                dx[off + i] += static_cast<Real>(k * go[off + i]);
              }
            }
          }
        }
      });
}

Var relu(Graph& g, const Var& x) {
  Tensor out(x.shape());
  const Real* xd = x.value().data();
  for (Index i = 0; i < out.numel(); ++i) out[i] = xd[i] < 0 ? Real(0) : xd[i];
  return g.record("relu", std::move(out), {x}, [](Node& self) {
    Node& xn = *self.inputs[0];
    Real* dx = xn.grad_ref().data();
    const Real* xv = xn.value.data();
    const Real* go = self.grad.data();
    for (Index i = 0; i < self.grad.numel(); ++i)
      if (xv[i] > 0) dx[i] += go[i];
  });
}

Var sigmoid(Graph& g, const Var& x) {
  Tensor out(x.shape());
  const Real* xd = x.value().data();
  for (Index i = 0; i < out.numel(); ++i) out[i] = sigmoid_scalar(xd[i]);
  return g.record("sigmoid", std::move(out), {x}, [](Node& self) {
    Node& xn = *self.inputs[0];
    Real* dx = xn.grad_ref().data();
    const Real* y = self.value.data();
    const Real* go = self.grad.data();
    for (Index i = 0; i < self.grad.numel(); ++i) dx[i] += go[i] * y[i] * (Real(1) - y[i]);
  });
}

Var max_pool3d(Graph& g, const Var& x) {
  require_rank(x.value(), 5, "max_pool3d input");
  const Index B = x.dim(0), C = x.dim(1), D = x.dim(2), H = x.dim(3), W = x.dim(4);
  for (int a = 2; a < 5; ++a) {
    if (x.dim(a) % 2 != 0) {
      throw DimensionError("max_pool3d: axis " + std::to_string(a) + " has odd extent " +
                           std::to_string(x.dim(a)));
    }
  }
  const Index d2 = D / 2, h2 = H / 2, w2 = W / 2;
  Tensor out({B, C, d2, h2, w2});
  std::vector<Index> arg(static_cast<size_t>(out.numel()));
  const Real* xd = x.value().data();
  Index o = 0;
  for (Index bc = 0; bc < B * C; ++bc) {
    const Real* xc = xd + bc * D * H * W;
    for (Index z = 0; z < d2; ++z)
      for (Index y = 0; y < h2; ++y)
        for (Index w = 0; w < w2; ++w, ++o) {
          Index best = -1;
          Real bv = 0;
          for (Index dz = 0; dz < 2; ++dz)
            for (Index dy = 0; dy < 2; ++dy)
              for (Index dw = 0; dw < 2; ++dw) {
                const Index idx = ((2 * z + dz) * H + (2 * y + dy)) * W + (2 * w + dw);
                if (best < 0 || xc[idx] > bv) {
                  best = idx;
                  bv = xc[idx];
                }
              }
          out[o] = bv;
          arg[static_cast<size_t>(o)] = bc * D * H * W + best;
        }
  }
  return g.record("max_pool3d", std::move(out), {x}, [arg = std::move(arg)](Node& self) {
    Real* dx = self.inputs[0]->grad_ref().data();
    const Real* go = self.grad.data();
    for (size_t i = 0; i < arg.size(); ++i) dx[arg[i]] += go[i];
  });
}

Var global_avg_pool(Graph& g, const Var& x) {
  require_rank(x.value(), 5, "global_avg_pool input");
  const Index BC = x.dim(0) * x.dim(1), S = spatial_size(x.value());
  Tensor out({x.dim(0), x.dim(1), 1, 1, 1});
  const Real* xd = x.value().data();
  for (Index i = 0; i < BC; ++i) {
    double s = 0.0;
    for (Index k = 0; k < S; ++k) s += xd[i * S + k];
    out[i] = static_cast<Real>(s / static_cast<double>(S));
  }
  return g.record("global_avg_pool", std::move(out), {x}, [BC, S](Node& self) {
    Real* dx = self.inputs[0]->grad_ref().data();
    const Real inv = Real(1) / static_cast<Real>(S);
    for (Index i = 0; i < BC; ++i) {
      const Real v = self.grad[i] * inv;
      for (Index k = 0; k < S; ++k) dx[i * S + k] += v;
    }
  });
}

Var channel_mean(Graph& g, const Var& x) {
  require_rank(x.value(), 5, "channel_mean input");
  const Index B = x.dim(0), C = x.dim(1), S = spatial_size(x.value());
  Tensor out({B, 1, x.dim(2), x.dim(3), x.dim(4)});
  const Real* xd = x.value().data();
  for (Index b = 0; b < B; ++b)
    for (Index i = 0; i < S; ++i) {
      double s = 0.0;
      for (Index c = 0; c < C; ++c) s += xd[(b * C + c) * S + i];
      out[b * S + i] = static_cast<Real>(s / static_cast<double>(C));
    }
  return g.record("channel_mean", std::move(out), {x}, [B, C, S](Node& self) {
    Real* dx = self.inputs[0]->grad_ref().data();
    const Real inv = Real(1) / static_cast<Real>(C);
    for (Index b = 0; b < B; ++b)
      for (Index c = 0; c < C; ++c)
        for (Index i = 0; i < S; ++i) dx[(b * C + c) * S + i] += self.grad[b * S + i] * inv;
  });
}

Var channel_max(Graph& g, const Var& x) {
  require_rank(x.value(), 5, "channel_max input");
  const Index B = x.dim(0), C = x.dim(1), S = spatial_size(x.value());
  Tensor out({B, 1, x.dim(2), x.dim(3), x.dim(4)});
  std::vector<Index> arg(static_cast<size_t>(B * S));
  const Real* xd = x.value().data();
  for (Index b = 0; b < B; ++b)
    for (Index i = 0; i < S; ++i) {
      Index best = 0;
      Real bv = xd[(b * C) * S + i];
      for (Index c = 1; c < C; ++c) {
        const Real v = xd[(b * C + c) * S + i];
        if (v > bv) {
          bv = v;
          best = c;
        }
      }
      out[b * S + i] = bv;
      arg[static_cast<size_t>(b * S + i)] = (b * C + best) * S + i;
    }
  return g.record("channel_max", std::move(out), {x}, [arg = std::move(arg)](Node& self) {
    Real* dx = self.inputs[0]->grad_ref().data();
    for (size_t i = 0; i < arg.size(); ++i) dx[arg[i]] += self.grad[static_cast<Index>(i)];
  });
}

Var trilinear_upsample(Graph& g, const Var& x) {
  require_rank(x.value(), 5, "trilinear_upsample input");
  const Index BC = x.dim(0) * x.dim(1), D = x.dim(2), H = x.dim(3), W = x.dim(4);
  Tensor t1({BC, D, H, 2 * W});
  upsample_axis(x.value().data(), t1.data(), BC * D * H, W, 1);
  Tensor t2({BC, D, 2 * H, 2 * W});
  upsample_axis(t1.data(), t2.data(), BC * D, H, 2 * W);
  Tensor out({x.dim(0), x.dim(1), 2 * D, 2 * H, 2 * W});
  upsample_axis(t2.data(), out.data(), BC, D, 4 * H * W);
  return g.record("trilinear_upsample", std::move(out), {x}, [BC, D, H, W](Node& self) {
    std::vector<Real> g2(static_cast<size_t>(BC * D * 4 * H * W));
    upsample_axis_adjoint(self.grad.data(), g2.data(), BC, D, 4 * H * W);
    std::vector<Real> g1(static_cast<size_t>(BC * D * H * 2 * W));
    upsample_axis_adjoint(g2.data(), g1.data(), BC * D, H, 2 * W);
    std::vector<Real> g0(static_cast<size_t>(BC * D * H * W));
    upsample_axis_adjoint(g1.data(), g0.data(), BC * D * H, W, 1);
    Real* dx = self.inputs[0]->grad_ref().data();
    for (size_t i = 0; i < g0.size(); ++i) dx[i] += g0[i];
  });
}

Var concat_channels(Graph& g, const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("concat_channels: no inputs");
  const Tensor& first = parts.front().value();
  require_rank(first, 5, "concat_channels input");
  Index C = 0;
  for (const auto& p : parts) {
    require_rank(p.value(), 5, "concat_channels input");
    for (int a : {0, 2, 3, 4}) {
      if (p.dim(a) != first.dim(a)) {
        throw DimensionError("concat_channels: axis " + std::to_string(a) + " differs (" +
                             std::to_string(p.dim(a)) + " vs " + std::to_string(first.dim(a)) +
                             ")");
      }
    }
    C += p.dim(1);
  }
  const Index B = first.dim(0), S = spatial_size(first);
  Tensor out({B, C, first.dim(2), first.dim(3), first.dim(4)});
  std::vector<Index> widths;
  for (Index b = 0; b < B; ++b) {
    Index c0 = 0;
    for (const auto& p : parts) {
      const Index pc = p.dim(1);
      std::memcpy(out.data() + (b * C + c0) * S, p.value().data() + b * pc * S,
                  static_cast<size_t>(pc * S) * sizeof(Real));
      c0 += pc;
    }
  }
  for (const auto& p : parts) widths.push_back(p.dim(1));
  return g.record("concat_channels", std::move(out), parts,
                  [widths = std::move(widths), B, C, S](Node& self) {
                    Index c0 = 0;
                    for (size_t k = 0; k < widths.size(); ++k) {
                      Node& in = *self.inputs[k];
                      const Index pc = widths[k];
                      if (in.requires_grad) {
                        Real* dx = in.grad_ref().data();
                        for (Index b = 0; b < B; ++b) {
                          const Real* src = self.grad.data() + (b * C + c0) * S;
                          Real* dst = dx + b * pc * S;
                          for (Index i = 0; i < pc * S; ++i) dst[i] += src[i];
                        }
                      }
                      c0 += pc;
                    }
                  });
}

Var add(Graph& g, const Var& a, const Var& b) {
  require_same_shape(a.value(), b.value(), "add");
  Tensor out(a.shape());
  for (Index i = 0; i < out.numel(); ++i) out[i] = a.value()[i] + b.value()[i];
  return g.record("add", std::move(out), {a, b}, [](Node& self) {
    for (int k = 0; k < 2; ++k)
      if (self.inputs[k]->requires_grad) self.inputs[k]->accumulate(self.grad);
  });
}

Var mul(Graph& g, const Var& a, const Var& b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != bv.rank() || av.rank() > 6) {
    throw DimensionError("mul: rank mismatch " + shape_string(av.shape()) + " vs " +
                         shape_string(bv.shape()));
  }
  // Pad to rank 6 and derive b's broadcast strides.
  std::array<Index, 6> ext{1, 1, 1, 1, 1, 1}, bstride{0, 0, 0, 0, 0, 0};
  const int off = 6 - av.rank();
  Index stride = 1;
  for (int i = av.rank() - 1; i >= 0; --i) {
    const Index ad = av.dim(i), bd = bv.dim(i);
    if (bd != ad && bd != 1) {
      throw DimensionError("mul: axis " + std::to_string(i) + " not broadcastable (" +
                           std::to_string(bd) + " vs " + std::to_string(ad) + ")");
    }
    ext[static_cast<size_t>(i + off)] = ad;
    bstride[static_cast<size_t>(i + off)] = bd == 1 ? 0 : stride;
    stride *= bd;
  }
  auto for_each = [ext, bstride](auto&& fn) {
    Index ai = 0;
    for (Index i0 = 0; i0 < ext[0]; ++i0)
      for (Index i1 = 0; i1 < ext[1]; ++i1)
        for (Index i2 = 0; i2 < ext[2]; ++i2)
          for (Index i3 = 0; i3 < ext[3]; ++i3)
            for (Index i4 = 0; i4 < ext[4]; ++i4) {
              const Index base = i0 * bstride[0] + i1 * bstride[1] + i2 * bstride[2] +
                                 i3 * bstride[3] + i4 * bstride[4];
              for (Index i5 = 0; i5 < ext[5]; ++i5, ++ai) fn(ai, base + i5 * bstride[5]);
            }
  };
  Tensor out(av.shape());
  for_each([&](Index ai, Index bi) { out[ai] = av[ai] * bv[bi]; });
  return g.record("mul", std::move(out), {a, b}, [for_each](Node& self) {
    Node& an = *self.inputs[0];
    Node& bn = *self.inputs[1];
    const Tensor& go = self.grad;
    if (an.requires_grad) {
      Tensor& da = an.grad_ref();
      for_each([&](Index ai, Index bi) { da[ai] += go[ai] * bn.value[bi]; });
    }
    if (bn.requires_grad) {
      std::vector<double> acc(static_cast<size_t>(bn.value.numel()), 0.0);
      for_each([&](Index ai, Index bi) {
        acc[static_cast<size_t>(bi)] += static_cast<double>(go[ai]) * an.value[ai];
      });
      Tensor& db = bn.grad_ref();
      for (size_t i = 0; i < acc.size(); ++i) db[static_cast<Index>(i)] += static_cast<Real>(acc[i]);
    }
  });
}

Var scale(Graph& g, const Var& x, const Var& s) {
  require_scalar(s, "scale");
  const Real k = s.value()[0];
  Tensor out(x.shape());
  for (Index i = 0; i < out.numel(); ++i) out[i] = x.value()[i] * k;
  return g.record("scale", std::move(out), {x, s}, [](Node& self) {
    Node& xn = *self.inputs[0];
    Node& sn = *self.inputs[1];
    const Real k = sn.value[0];
    if (xn.requires_grad) {
      Real* dx = xn.grad_ref().data();
      for (Index i = 0; i < self.grad.numel(); ++i) dx[i] += self.grad[i] * k;
    }
    if (sn.requires_grad) {
      double acc = 0.0;
      for (Index i = 0; i < self.grad.numel(); ++i)
        acc += static_cast<double>(self.grad[i]) * xn.value[i];
      sn.grad_ref()[0] += static_cast<Real>(acc);
    }
  });
}

Var lerp(Graph& g, const Var& a, const Var& b, const Var& alpha) {
  require_same_shape(a.value(), b.value(), "lerp");
  require_scalar(alpha, "lerp");
  const Real t = alpha.value()[0];
  Tensor out(a.shape());
  for (Index i = 0; i < out.numel(); ++i)
    out[i] = t * a.value()[i] + (Real(1) - t) * b.value()[i];
  return g.record("lerp", std::move(out), {a, b, alpha}, [](Node& self) {
    Node& an = *self.inputs[0];
    Node& bn = *self.inputs[1];
    Node& tn = *self.inputs[2];
    const Real t = tn.value[0];
    const Tensor& go = self.grad;
    if (an.requires_grad) {
      Real* d = an.grad_ref().data();
      for (Index i = 0; i < go.numel(); ++i) d[i] += t * go[i];
    }
    if (bn.requires_grad) {
      Real* d = bn.grad_ref().data();
      for (Index i = 0; i < go.numel(); ++i) d[i] += (Real(1) - t) * go[i];
    }
    if (tn.requires_grad) {
      double acc = 0.0;
      for (Index i = 0; i < go.numel(); ++i)
        acc += static_cast<double>(go[i]) * (an.value[i] - bn.value[i]);
      tn.grad_ref()[0] += static_cast<Real>(acc);
    }
  });
}

Var sum(Graph& g, const Var& x) {
  double s = 0.0;
  for (Real v : x.value().values()) s += v;
  return g.record("sum", Tensor::scalar(static_cast<Real>(s)), {x}, [](Node& self) {
    Real* dx = self.inputs[0]->grad_ref().data();
    const Real go = self.grad[0];
    for (Index i = 0; i < self.inputs[0]->value.numel(); ++i) dx[i] += go;
  });
}

Var combine(Graph& g, const Var& a, double wa, const Var& b, double wb) {
  require_scalar(a, "combine");
  require_scalar(b, "combine");
  const double v = wa * a.value()[0] + wb * b.value()[0];
  return g.record("combine", Tensor::scalar(static_cast<Real>(v)), {a, b},
                  [wa, wb](Node& self) {
                    const Real go = self.grad[0];
                    if (self.inputs[0]->requires_grad)
                      self.inputs[0]->grad_ref()[0] += static_cast<Real>(wa * go);
                    if (self.inputs[1]->requires_grad)
                      self.inputs[1]->grad_ref()[0] += static_cast<Real>(wb * go);
                  });
}

WAVECOR_END_NAMESPACE
