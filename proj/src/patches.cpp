#include "wavecor/patches.hpp"

#include <algorithm>

#include "wavecor/errors.hpp"

WAVECOR_BEGIN_NAMESPACE

std::vector<Index> plan_axis(Index dim, Index patch, Index overlap) {
  if (patch < 1) throw ConfigError("patch size must be >= 1");
  if (patch > dim) {
    throw ConfigError("patch size " + std::to_string(patch) + " exceeds volume extent " +
                      std::to_string(dim));
  }
  if (overlap < 0 || overlap >= patch) {
    throw ConfigError("overlap " + std::to_string(overlap) + " must lie in [0, patch)");
  }
  const Index stride = patch - overlap;
  std::vector<Index> s;
  for (Index x = 0;; x += stride) {
    const Index c = std::min(x, dim - patch);
    if (s.empty() || s.back() != c) s.push_back(c);
    if (c == dim - patch) break;
  }
  return s;
}

PatchGrid plan_patches(const Dims3& dims, const Dims3& patch, Index overlap) {
  PatchGrid g;
  g.dims = dims;
  g.patch = patch;
  g.overlap = overlap;
  for (size_t a = 0; a < 3; ++a) g.starts[a] = plan_axis(dims[a], patch[a], overlap);
  return g;
}

Dims3 PatchGrid::origin(Index i) const {
  const auto nh = static_cast<Index>(starts[1].size());
  const auto nw = static_cast<Index>(starts[2].size());
  const Index w = i % nw, h = (i / nw) % nh, d = i / (nw * nh);
  return {starts[0].at(static_cast<size_t>(d)), starts[1].at(static_cast<size_t>(h)),
          starts[2].at(static_cast<size_t>(w))};
}

double ramp_weight(Index i, Index p, Index o) {
  if (o <= 0) return 1.0;
  const double r = static_cast<double>(o + 1);
  return std::min({1.0, static_cast<double>(i + 1) / r, static_cast<double>(p - i) / r});
}

Tensor extract_patch(const Tensor& x, const Dims3& origin, const Dims3& size) {
  require_rank(x, 5, "extract_patch");
  for (int a = 0; a < 3; ++a) {
    const auto k = static_cast<size_t>(a);
    if (origin[k] < 0 || size[k] < 1 || origin[k] + size[k] > x.dim(a + 2)) {
      throw DimensionError("extract_patch: block exceeds axis " + std::to_string(a + 2));
    }
  }
  const Index B = x.dim(0), C = x.dim(1), D = x.dim(2), H = x.dim(3), W = x.dim(4);
  Tensor out({B, C, size[0], size[1], size[2]});
  Real* o = out.data();
  for (Index bc = 0; bc < B * C; ++bc)
    for (Index d = 0; d < size[0]; ++d)
      for (Index h = 0; h < size[1]; ++h, o += size[2]) {
        const Real* src = x.data() + ((bc * D + origin[0] + d) * H + origin[1] + h) * W + origin[2];
        std::copy(src, src + size[2], o);
      }
  return out;
}

BinaryMask3 extract_patch(const BinaryMask3& m, const Dims3& origin, const Dims3& size) {
  for (size_t a = 0; a < 3; ++a) {
    if (origin[a] < 0 || size[a] < 1 || origin[a] + size[a] > m.dims()[a]) {
      throw DimensionError("extract_patch: block exceeds mask axis " + std::to_string(a));
    }
  }
  BinaryMask3 out(size, m.spacing());
  for (Index d = 0; d < size[0]; ++d)
    for (Index h = 0; h < size[1]; ++h)
      for (Index w = 0; w < size[2]; ++w)
        out.set(d, h, w, m(origin[0] + d, origin[1] + h, origin[2] + w) != 0);
  return out;
}

namespace {

// Per-axis ramp tables and the voxelwise normalizer of a grid.
struct Blend {
  std::array<std::vector<double>, 3> ramp;
  std::vector<double> norm;
};

Blend make_blend(const PatchGrid& grid) {
  Blend b;
  for (size_t a = 0; a < 3; ++a) {
    b.ramp[a].resize(static_cast<size_t>(grid.patch[a]));
    for (Index i = 0; i < grid.patch[a]; ++i)
      b.ramp[a][static_cast<size_t>(i)] = ramp_weight(i, grid.patch[a], grid.overlap);
  }
  const Index D = grid.dims[0], H = grid.dims[1], W = grid.dims[2];
  b.norm.assign(static_cast<size_t>(D * H * W), 0.0);
  for (Index c = 0; c < grid.cells(); ++c) {
    const Dims3 o = grid.origin(c);
    for (Index d = 0; d < grid.patch[0]; ++d)
      for (Index h = 0; h < grid.patch[1]; ++h) {
        const double wdh = b.ramp[0][static_cast<size_t>(d)] * b.ramp[1][static_cast<size_t>(h)];
        double* n = b.norm.data() + ((o[0] + d) * H + o[1] + h) * W + o[2];
        for (Index w = 0; w < grid.patch[2]; ++w) n[w] += wdh * b.ramp[2][static_cast<size_t>(w)];
      }
  }
  return b;
}

}  // namespace

Tensor stitch(const std::vector<Tensor>& patches, const PatchGrid& grid) {
  if (static_cast<Index>(patches.size()) != grid.cells()) {
    throw UsageError("stitch: expected " + std::to_string(grid.cells()) + " patches, got " +
                     std::to_string(patches.size()));
  }
  const Index D = grid.dims[0], H = grid.dims[1], W = grid.dims[2];
  const Index C = patches.empty() ? 1 : patches[0].dim(1);
  const Blend b = make_blend(grid);
  std::vector<double> acc(static_cast<size_t>(C * D * H * W), 0.0);
  for (Index c = 0; c < grid.cells(); ++c) {
    const Tensor& p = patches[static_cast<size_t>(c)];
    const Shape want{1, C, grid.patch[0], grid.patch[1], grid.patch[2]};
    if (p.shape() != want) {
      throw DimensionError("stitch: patch " + std::to_string(c) + " has shape " +
                           shape_string(p.shape()) + ", expected " + shape_string(want));
    }
    const Dims3 o = grid.origin(c);
    for (Index ch = 0; ch < C; ++ch)
      for (Index d = 0; d < grid.patch[0]; ++d)
        for (Index h = 0; h < grid.patch[1]; ++h) {
          const double wdh = b.ramp[0][static_cast<size_t>(d)] * b.ramp[1][static_cast<size_t>(h)];
          const Real* src = p.data() + ((ch * grid.patch[0] + d) * grid.patch[1] + h) * grid.patch[2];
          const Index base = ((ch * D + o[0] + d) * H + o[1] + h) * W + o[2];
          const Index nbase = ((o[0] + d) * H + o[1] + h) * W + o[2];
          for (Index w = 0; w < grid.patch[2]; ++w) {
            const double wt = wdh * b.ramp[2][static_cast<size_t>(w)] / b.norm[static_cast<size_t>(nbase + w)];
            acc[static_cast<size_t>(base + w)] += wt * src[w];
          }
        }
  }
  Tensor out({1, C, D, H, W});
  for (Index i = 0; i < out.numel(); ++i) out[i] = static_cast<Real>(acc[static_cast<size_t>(i)]);
  return out;
}

Tensor stitch_weight_sum(const PatchGrid& grid) {
  std::vector<Tensor> ones;
  for (Index c = 0; c < grid.cells(); ++c)
    ones.push_back(Tensor::ones({1, 1, grid.patch[0], grid.patch[1], grid.patch[2]}));
  return stitch(ones, grid);
}

Tensor flip_w(const Tensor& x) {
  require_rank(x, 5, "flip_w");
  Tensor out(x.shape());
  const Index W = x.dim(4), rows = x.numel() / std::max<Index>(W, 1);
  for (Index r = 0; r < rows; ++r)
    std::reverse_copy(x.data() + r * W, x.data() + (r + 1) * W, out.data() + r * W);
  return out;
}

BinaryMask3 flip_w(const BinaryMask3& m) {
  BinaryMask3 out(m.dims(), m.spacing());
  for (Index d = 0; d < m.depth(); ++d)
    for (Index h = 0; h < m.height(); ++h)
      for (Index w = 0; w < m.width(); ++w) out.set(d, h, m.width() - 1 - w, m(d, h, w) != 0);
  return out;
}

bool random_flip(Sample& s, std::mt19937_64& rng, bool force) {
  const bool flip = force || std::bernoulli_distribution(0.5)(rng);
  if (!flip) return false;
  s.volume = flip_w(s.volume);
  if (!s.prior.empty()) s.prior = flip_w(s.prior);
  s.label = flip_w(s.label);
  return true;
}

WAVECOR_END_NAMESPACE
