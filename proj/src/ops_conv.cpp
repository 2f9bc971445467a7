// conv3d lowered to GEMM: im2col over slabs of output depth, Eigen for the
// matrix products.

#include <Eigen/Core>
#include <algorithm>
#include <cstring>

#include "wavecor/errors.hpp"
#include "wavecor/ops.hpp"

WAVECOR_BEGIN_NAMESPACE

namespace {

using MatR = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Strided = Eigen::OuterStride<>;
using MapR = Eigen::Map<MatR, 0, Strided>;
using CMapR = Eigen::Map<const MatR, 0, Strided>;

constexpr Index kColBudget = Index(1) << 22;  // elements per im2col slab

struct Geometry {
  Index B, Cin, D, H, W;
  Index Cout, kd, kh, kw;
  Index Do, Ho, Wo;
  Index sd, sh, sw, pd, ph, pw;
  Index groups, cin_g, cout_g;

  Index K() const { return kd * kh * kw; }
  Index in_spatial() const { return D * H * W; }
  Index out_plane() const { return Ho * Wo; }
  Index out_spatial() const { return Do * Ho * Wo; }
  bool pointwise() const {
    return kd == 1 && kh == 1 && kw == 1 && sd == 1 && sh == 1 && sw == 1 && pd == 0 &&
           ph == 0 && pw == 0;
  }
  Index slab_depth() const {
    const Index rows = cin_g * K();
    const Index per_depth = std::max<Index>(1, rows * out_plane());
    return std::clamp<Index>(kColBudget / per_depth, 1, Do);
  }
};

// Columns for output depths [od0, od1) of one group; `x` points at the
// group's first input channel.
void im2col(const Geometry& q, const Real* x, Index od0, Index od1, Real* col) {
  const Index P = (od1 - od0) * q.out_plane();
  for (Index ci = 0; ci < q.cin_g; ++ci) {
    const Real* xc = x + ci * q.in_spatial();
    for (Index kz = 0; kz < q.kd; ++kz)
      for (Index ky = 0; ky < q.kh; ++ky)
        for (Index kx = 0; kx < q.kw; ++kx) {
          const Index row = ((ci * q.kd + kz) * q.kh + ky) * q.kw + kx;
          Real* dst = col + row * P;
          for (Index od = od0; od < od1; ++od) {
            const Index iz = od * q.sd - q.pd + kz;
            for (Index oh = 0; oh < q.Ho; ++oh, dst += q.Wo) {
              const Index iy = oh * q.sh - q.ph + ky;
              if (iz < 0 || iz >= q.D || iy < 0 || iy >= q.H) {
                std::fill(dst, dst + q.Wo, Real(0));
                continue;
              }
              const Real* src = xc + (iz * q.H + iy) * q.W;
              if (q.sw == 1) {
                const Index lo = std::clamp<Index>(q.pw - kx, 0, q.Wo);
                const Index hi = std::clamp<Index>(q.W + q.pw - kx, lo, q.Wo);
                std::fill(dst, dst + lo, Real(0));
                std::memcpy(dst + lo, src + lo - q.pw + kx,
                            static_cast<size_t>(hi - lo) * sizeof(Real));
                std::fill(dst + hi, dst + q.Wo, Real(0));
              } else {
                for (Index ow = 0; ow < q.Wo; ++ow) {
                  const Index ix = ow * q.sw - q.pw + kx;
                  dst[ow] = (ix >= 0 && ix < q.W) ? src[ix] : Real(0);
                }
              }
            }
          }
        }
  }
}

// Adjoint of im2col: scatter-add columns back into `dx`.
void col2im(const Geometry& q, const Real* col, Index od0, Index od1, Real* dx) {
  const Index P = (od1 - od0) * q.out_plane();
  for (Index ci = 0; ci < q.cin_g; ++ci) {
    Real* xc = dx + ci * q.in_spatial();
    for (Index kz = 0; kz < q.kd; ++kz)
      for (Index ky = 0; ky < q.kh; ++ky)
        for (Index kx = 0; kx < q.kw; ++kx) {
          const Index row = ((ci * q.kd + kz) * q.kh + ky) * q.kw + kx;
          const Real* src = col + row * P;
          for (Index od = od0; od < od1; ++od) {
            const Index iz = od * q.sd - q.pd + kz;
            for (Index oh = 0; oh < q.Ho; ++oh, src += q.Wo) {
              const Index iy = oh * q.sh - q.ph + ky;
              if (iz < 0 || iz >= q.D || iy < 0 || iy >= q.H) continue;
              Real* dst = xc + (iz * q.H + iy) * q.W;
              if (q.sw == 1) {
                const Index lo = std::clamp<Index>(q.pw - kx, 0, q.Wo);
                const Index hi = std::clamp<Index>(q.W + q.pw - kx, lo, q.Wo);
                Real* d = dst - q.pw + kx;
                for (Index ow = lo; ow < hi; ++ow) d[ow] += src[ow];
                continue;
              }
              for (Index ow = 0; ow < q.Wo; ++ow) {
                const Index ix = ow * q.sw - q.pw + kx;
                if (ix >= 0 && ix < q.W) dst[ix] += src[ow];
              }
            }
          }
        }
  }
}

Geometry make_geometry(const Tensor& x, const Tensor& w, const Conv3dOptions& opt) {
  require_rank(x, 5, "conv3d input");
  require_rank(w, 5, "conv3d weight");
  Geometry q{};
  q.B = x.dim(0);
  q.Cin = x.dim(1);
  q.D = x.dim(2);
  q.H = x.dim(3);
  q.W = x.dim(4);
  q.Cout = w.dim(0);
  q.kd = w.dim(2);
  q.kh = w.dim(3);
  q.kw = w.dim(4);
  q.groups = opt.groups;
  if (q.groups < 1) throw DimensionError("conv3d: groups must be >= 1");
  if (q.Cin % q.groups != 0) {
    throw DimensionError("conv3d: input channels (axis 1) = " + std::to_string(q.Cin) +
                         " not divisible by groups " + std::to_string(q.groups));
  }
  if (q.Cout % q.groups != 0) {
    throw DimensionError("conv3d: output channels (weight axis 0) = " +
                         std::to_string(q.Cout) + " not divisible by groups " +
                         std::to_string(q.groups));
  }
  q.cin_g = q.Cin / q.groups;
  q.cout_g = q.Cout / q.groups;
  if (w.dim(1) != q.cin_g) {
    throw DimensionError("conv3d: weight axis 1 = " + std::to_string(w.dim(1)) +
                         " but input provides " + std::to_string(q.cin_g) +
                         " channels per group");
  }
  q.sd = opt.stride[0];
  q.sh = opt.stride[1];
  q.sw = opt.stride[2];
  q.pd = opt.padding[0];
  q.ph = opt.padding[1];
  q.pw = opt.padding[2];
  q.Do = conv_output_size(q.D, q.kd, q.sd, q.pd, 2);
  q.Ho = conv_output_size(q.H, q.kh, q.sh, q.ph, 3);
  q.Wo = conv_output_size(q.W, q.kw, q.sw, q.pw, 4);
  return q;
}

}  // namespace

Index conv_output_size(Index in, Index kernel, Index stride, Index pad, int axis) {
  if (stride < 1) throw DimensionError("conv3d: stride must be >= 1 on axis " + std::to_string(axis));
  const Index span = in + 2 * pad - kernel;
  if (span < 0) {
    throw DimensionError("conv3d: kernel " + std::to_string(kernel) + " larger than padded input " +
                         std::to_string(in + 2 * pad) + " on axis " + std::to_string(axis));
  }
  return span / stride + 1;
}

Var conv3d(Graph& g, const Var& x, const Var& weight, const Var& bias,
           const Conv3dOptions& opt) {
  const Geometry q = make_geometry(x.value(), weight.value(), opt);
  if (bias.valid() && bias.value().numel() != q.Cout) {
    throw DimensionError("conv3d: bias length " + std::to_string(bias.value().numel()) +
                         " != output channels " + std::to_string(q.Cout));
  }
  Tensor out({q.B, q.Cout, q.Do, q.Ho, q.Wo});
  const Index CK = q.cin_g * q.K();
  const Index Pfull = q.out_spatial();
  const Index slab = q.slab_depth();
  const Real* xd = x.value().data();
  const Real* wd = weight.value().data();
  std::vector<Real> col;
  if (!q.pointwise()) col.resize(static_cast<size_t>(CK * slab * q.out_plane()));

  for (Index b = 0; b < q.B; ++b) {
    for (Index gi = 0; gi < q.groups; ++gi) {
      const Real* xg = xd + (b * q.Cin + gi * q.cin_g) * q.in_spatial();
      Real* og = out.data() + (b * q.Cout + gi * q.cout_g) * Pfull;
      CMapR wmat(wd + gi * q.cout_g * CK, q.cout_g, CK, Strided(CK));
      if (q.pointwise()) {
        CMapR xmat(xg, CK, Pfull, Strided(Pfull));
        MapR omat(og, q.cout_g, Pfull, Strided(Pfull));
        omat.noalias() = wmat * xmat;
        continue;
      }
      for (Index od0 = 0; od0 < q.Do; od0 += slab) {
        const Index od1 = std::min(q.Do, od0 + slab);
        const Index P = (od1 - od0) * q.out_plane();
        im2col(q, xg, od0, od1, col.data());
        CMapR cmat(col.data(), CK, P, Strided(P));
        MapR omat(og + od0 * q.out_plane(), q.cout_g, P, Strided(Pfull));
        omat.noalias() = wmat * cmat;
      }
    }
  }
  if (bias.valid()) {
    const Real* bd = bias.value().data();
    for (Index b = 0; b < q.B; ++b)
      for (Index co = 0; co < q.Cout; ++co) {
        Real* o = out.data() + (b * q.Cout + co) * Pfull;
        for (Index i = 0; i < Pfull; ++i) o[i] += bd[co];
      }
  }

  std::vector<Var> inputs{x, weight};
  if (bias.valid()) inputs.push_back(bias);
  const bool has_bias = bias.valid();
  return g.record(
      "conv3d", std::move(out), std::move(inputs), [q, has_bias](Node& self) {
        Node& xn = *self.inputs[0];
        Node& wn = *self.inputs[1];
        const Tensor& gout = self.grad;
        const Index CK = q.cin_g * q.K();
        const Index Pfull = q.out_spatial();
        const Index slab = q.slab_depth();
        const Real* god = gout.data();
        const Real* xd = xn.value.data();
        const Real* wd = wn.value.data();
        Real* dx = xn.requires_grad ? xn.grad_ref().data() : nullptr;
        Real* dw = wn.requires_grad ? wn.grad_ref().data() : nullptr;
        std::vector<Real> col, dcol;
        if (!q.pointwise()) {
          const auto n = static_cast<size_t>(CK * slab * q.out_plane());
          if (dw) col.resize(n);
          if (dx) dcol.resize(n);
        }
        for (Index b = 0; b < q.B; ++b) {
          for (Index gi = 0; gi < q.groups; ++gi) {
            const Real* xg = xd + (b * q.Cin + gi * q.cin_g) * q.in_spatial();
            Real* dxg = dx ? dx + (b * q.Cin + gi * q.cin_g) * q.in_spatial() : nullptr;
            const Real* gg = god + (b * q.Cout + gi * q.cout_g) * Pfull;
            CMapR wmat(wd + gi * q.cout_g * CK, q.cout_g, CK, Strided(CK));
            if (q.pointwise()) {
              CMapR gmat(gg, q.cout_g, Pfull, Strided(Pfull));
              if (dw) {
                CMapR xmat(xg, CK, Pfull, Strided(Pfull));
                MapR dwmat(dw + gi * q.cout_g * CK, q.cout_g, CK, Strided(CK));
                dwmat.noalias() += gmat * xmat.transpose();
              }
              if (dxg) {
                MapR dxmat(dxg, CK, Pfull, Strided(Pfull));
                dxmat.noalias() += wmat.transpose() * gmat;
              }
              continue;
            }
            for (Index od0 = 0; od0 < q.Do; od0 += slab) {
              const Index od1 = std::min(q.Do, od0 + slab);
              const Index P = (od1 - od0) * q.out_plane();
              CMapR gmat(gg + od0 * q.out_plane(), q.cout_g, P, Strided(Pfull));
              if (dw) {
                im2col(q, xg, od0, od1, col.data());
                CMapR cmat(col.data(), CK, P, Strided(P));
                MapR dwmat(dw + gi * q.cout_g * CK, q.cout_g, CK, Strided(CK));
                dwmat.noalias() += gmat * cmat.transpose();
              }
              if (dxg) {
                MapR dcmat(dcol.data(), CK, P, Strided(P));
                dcmat.noalias() = wmat.transpose() * gmat;
                col2im(q, dcol.data(), od0, od1, dxg);
              }
            }
          }
        }
        if (has_bias && self.inputs[2]->requires_grad) {
          Real* db = self.inputs[2]->grad_ref().data();
          for (Index b = 0; b < q.B; ++b)
            for (Index co = 0; co < q.Cout; ++co) {
              const Real* gp = god + (b * q.Cout + co) * Pfull;
              double s = 0.0;
              for (Index i = 0; i < Pfull; ++i) s += gp[i];
              db[co] += static_cast<Real>(s);
            }
        }
      });
}

WAVECOR_END_NAMESPACE
