#include "wavecor/wavelet.hpp"

#include <cmath>

#include "wavecor/errors.hpp"

WAVECOR_BEGIN_NAMESPACE

namespace {

// Row-major 2x2 map (u0, u1) -> (m00 u0 + m01 u1, m10 u0 + m11 u1).
// Butterflies run in double; each output is rounded once on store.
using Mat2 = std::array<double, 4>;

Mat2 analysis(const FilterPair& f) {
  return {f.analysis_low[0], f.analysis_low[1], f.analysis_high[0], f.analysis_high[1]};
}

Mat2 synthesis(const FilterPair& f) {
  return {f.synthesis_low[0], f.synthesis_high[0], f.synthesis_low[1], f.synthesis_high[1]};
}

Mat2 transpose(const Mat2& m) { return {m[0], m[2], m[1], m[3]}; }

inline void apply(const Mat2& m, double& u0, double& u1) {
  const double a = m[0] * u0 + m[1] * u1;
  const double b = m[2] * u0 + m[3] * u1;
  u0 = a;
  u1 = b;
}

// Butterflies on one 2x2x2 block indexed 4a + 2b + c, in D, H, W order.
inline void block_forward(const Mat2& m, double* v) {
  for (int i = 0; i < 4; ++i) apply(m, v[i], v[4 + i]);
  for (int fd = 0; fd < 2; ++fd)
    for (int c = 0; c < 2; ++c) apply(m, v[4 * fd + c], v[4 * fd + 2 + c]);
  for (int i = 0; i < 8; i += 2) apply(m, v[i], v[i + 1]);
}

// Inverse-direction butterflies in W, H, D order.
inline void block_backward(const Mat2& m, double* v) {
  for (int i = 0; i < 8; i += 2) apply(m, v[i], v[i + 1]);
  for (int fd = 0; fd < 2; ++fd)
    for (int c = 0; c < 2; ++c) apply(m, v[4 * fd + c], v[4 * fd + 2 + c]);
  for (int i = 0; i < 4; ++i) apply(m, v[i], v[4 + i]);
}

Tensor decompose(const Tensor& x, const Mat2& m) {
  require_rank(x, 5, "dwt3 input");
  for (int a = 2; a < 5; ++a) {
    if (x.dim(a) % 2 != 0) {
      throw DimensionError("dwt3: spatial axis " + std::to_string(a) + " has odd extent " +
                           std::to_string(x.dim(a)));
    }
  }
  const Index B = x.dim(0), C = x.dim(1), D = x.dim(2), H = x.dim(3), W = x.dim(4);
  const Index d = D / 2, h = H / 2, w = W / 2, sub = d * h * w;
  Tensor out({B, C, kSubbands, d, h, w});
  const Real* xd = x.data();
  Real* od = out.data();
  double v[8];
  for (Index bc = 0; bc < B * C; ++bc) {
    const Real* src = xd + bc * D * H * W;
    Real* dst = od + bc * kSubbands * sub;
    for (Index i = 0; i < d; ++i)
      for (Index j = 0; j < h; ++j)
        for (Index l = 0; l < w; ++l) {
          for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
              for (int c = 0; c < 2; ++c)
                v[4 * a + 2 * b + c] = src[((2 * i + a) * H + 2 * j + b) * W + 2 * l + c];
          block_forward(m, v);
          const Index p = (i * h + j) * w + l;
          for (int k = 0; k < 8; ++k) dst[k * sub + p] = static_cast<Real>(v[k]);
        }
  }
  return out;
}

Tensor compose(const Tensor& s, const Mat2& m) {
  require_rank(s, 6, "iwt3 input");
  if (s.dim(2) != kSubbands) {
    throw DimensionError("iwt3: subband axis (axis 2) has extent " + std::to_string(s.dim(2)) +
                         ", expected 8");
  }
  const Index B = s.dim(0), C = s.dim(1), d = s.dim(3), h = s.dim(4), w = s.dim(5);
  const Index D = 2 * d, H = 2 * h, W = 2 * w, sub = d * h * w;
  Tensor out({B, C, D, H, W});
  const Real* sd = s.data();
  Real* od = out.data();
  double v[8];
  for (Index bc = 0; bc < B * C; ++bc) {
    const Real* src = sd + bc * kSubbands * sub;
    Real* dst = od + bc * D * H * W;
    for (Index i = 0; i < d; ++i)
      for (Index j = 0; j < h; ++j)
        for (Index l = 0; l < w; ++l) {
          const Index p = (i * h + j) * w + l;
          for (int k = 0; k < 8; ++k) v[k] = src[k * sub + p];
          block_backward(m, v);
          for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
              for (int c = 0; c < 2; ++c)
                dst[((2 * i + a) * H + 2 * j + b) * W + 2 * l + c] = static_cast<Real>(v[4 * a + 2 * b + c]);
        }
  }
  return out;
}

void accumulate_into(Node& n, const Tensor& g) {
  if (n.requires_grad) n.accumulate(g);
}

}  // namespace

FilterPair FilterPair::haar() {
  const double r = 1.0 / std::sqrt(2.0);
  return {{r, r}, {r, -r}, {r, r}, {r, -r}};
}

Tensor dwt3(const Tensor& x, const FilterPair& f) { return decompose(x, analysis(f)); }
Tensor iwt3(const Tensor& s, const FilterPair& f) { return compose(s, synthesis(f)); }
Tensor dwt3_adjoint(const Tensor& s, const FilterPair& f) {
  return compose(s, transpose(analysis(f)));
}
Tensor iwt3_adjoint(const Tensor& x, const FilterPair& f) {
  return decompose(x, transpose(synthesis(f)));
}

Var dwt3(Graph& g, const Var& x, const FilterPair& f) {
  return g.record("dwt3", dwt3(x.value(), f), {x}, [f](Node& self) {
    accumulate_into(*self.inputs[0], dwt3_adjoint(self.grad, f));
  });
}

Var iwt3(Graph& g, const Var& s, const FilterPair& f) {
  return g.record("iwt3", iwt3(s.value(), f), {s}, [f](Node& self) {
    accumulate_into(*self.inputs[0], iwt3_adjoint(self.grad, f));
  });
}

Tensor subbands_to_channels(const Tensor& s) {
  require_rank(s, 6, "subbands_to_channels input");
  if (s.dim(2) != kSubbands) {
    throw DimensionError("subbands_to_channels: axis 2 has extent " + std::to_string(s.dim(2)) +
                         ", expected 8");
  }
  const Index B = s.dim(0), C = s.dim(1), S = s.dim(3) * s.dim(4) * s.dim(5);
  Tensor out({B, kSubbands * C, s.dim(3), s.dim(4), s.dim(5)});
  for (Index b = 0; b < B; ++b)
    for (Index c = 0; c < C; ++c)
      for (Index k = 0; k < kSubbands; ++k) {
        const Real* src = s.data() + ((b * C + c) * kSubbands + k) * S;
        Real* dst = out.data() + (b * kSubbands * C + k * C + c) * S;
        std::copy(src, src + S, dst);
      }
  return out;
}

Tensor channels_to_subbands(const Tensor& x) {
  require_rank(x, 5, "channels_to_subbands input");
  if (x.dim(1) % kSubbands != 0) {
    throw DimensionError("channels_to_subbands: channel axis (axis 1) = " +
                         std::to_string(x.dim(1)) + " is not a multiple of 8");
  }
  const Index B = x.dim(0), C = x.dim(1) / kSubbands, S = spatial_size(x);
  Tensor out({B, C, kSubbands, x.dim(2), x.dim(3), x.dim(4)});
  for (Index b = 0; b < B; ++b)
    for (Index c = 0; c < C; ++c)
      for (Index k = 0; k < kSubbands; ++k) {
        const Real* src = x.data() + (b * kSubbands * C + k * C + c) * S;
        Real* dst = out.data() + ((b * C + c) * kSubbands + k) * S;
        std::copy(src, src + S, dst);
      }
  return out;
}

Var subbands_to_channels(Graph& g, const Var& s) {
  return g.record("subbands_to_channels", subbands_to_channels(s.value()), {s},
                  [](Node& self) { accumulate_into(*self.inputs[0], channels_to_subbands(self.grad)); });
}

Var channels_to_subbands(Graph& g, const Var& x) {
  return g.record("channels_to_subbands", channels_to_subbands(x.value()), {x},
                  [](Node& self) { accumulate_into(*self.inputs[0], subbands_to_channels(self.grad)); });
}

Var subband_weighted_sum(Graph& g, const Var& flat, const Var& a) {
  const Tensor& fv = flat.value();
  require_rank(fv, 5, "subband_weighted_sum input");
  if (fv.dim(1) % kSubbands != 0) {
    throw DimensionError("subband_weighted_sum: channel axis (axis 1) = " +
                         std::to_string(fv.dim(1)) + " is not a multiple of 8");
  }
  const Index B = fv.dim(0), C = fv.dim(1) / kSubbands, S = spatial_size(fv);
  if (a.value().shape() != Shape{B, kSubbands, 1, 1, 1}) {
    throw DimensionError("subband_weighted_sum: weights must be (B, 8, 1, 1, 1), got " +
                         shape_string(a.shape()));
  }
  Tensor out({B, C, fv.dim(2), fv.dim(3), fv.dim(4)});
  for (Index b = 0; b < B; ++b)
    for (Index k = 0; k < kSubbands; ++k) {
      const Real ak = a.value()[b * kSubbands + k];
      for (Index c = 0; c < C; ++c) {
        const Real* src = fv.data() + (b * kSubbands * C + k * C + c) * S;
        Real* dst = out.data() + (b * C + c) * S;
        for (Index i = 0; i < S; ++i) dst[i] += ak * src[i];
      }
    }
  return g.record("subband_weighted_sum", std::move(out), {flat, a}, [B, C, S](Node& self) {
    Node& fn = *self.inputs[0];
    Node& an = *self.inputs[1];
    const Tensor& go = self.grad;
    for (Index b = 0; b < B; ++b)
      for (Index k = 0; k < kSubbands; ++k) {
        const Real ak = an.value[b * kSubbands + k];
        double acc = 0.0;
        for (Index c = 0; c < C; ++c) {
          const Index fo = (b * kSubbands * C + k * C + c) * S;
          const Index oo = (b * C + c) * S;
          if (fn.requires_grad) {
            Real* df = fn.grad_ref().data() + fo;
            for (Index i = 0; i < S; ++i) df[i] += ak * go[oo + i];
          }
          if (an.requires_grad) {
            for (Index i = 0; i < S; ++i)
              acc += static_cast<double>(go[oo + i]) * fn.value[fo + i];
          }
        }
        if (an.requires_grad) an.grad_ref()[b * kSubbands + k] += static_cast<Real>(acc);
      }
  });
}

WAVECOR_END_NAMESPACE
