#pragma once

#include <array>
#include <random>
#include <vector>

#include "wavecor/mask.hpp"
#include "wavecor/tensor.hpp"

WAVECOR_BEGIN_NAMESPACE

/// Start coordinates along each axis for overlapping patches. Cells are
/// enumerated with W varying fastest.
struct PatchGrid {
  Dims3 dims{0, 0, 0};
  Dims3 patch{0, 0, 0};
  Index overlap = 0;
  std::array<std::vector<Index>, 3> starts;

  Index cells() const {
    return static_cast<Index>(starts[0].size() * starts[1].size() * starts[2].size());
  }
  /// Origin of cell `i` in grid order.
  Dims3 origin(Index i) const;
};

/// Starts at stride (patch - overlap), last start clamped to dim - patch,
/// duplicates removed. Throws ConfigError if patch > dim or overlap >= patch.
std::vector<Index> plan_axis(Index dim, Index patch, Index overlap);
PatchGrid plan_patches(const Dims3& dims, const Dims3& patch, Index overlap);

/// Blend weight of offset i inside a patch of extent p with overlap o:
/// min(1, (i + 1) / (o + 1), (p - i) / (o + 1)); 1 everywhere when o = 0.
double ramp_weight(Index i, Index p, Index o);

/// Copies the (B, C, patch) block at `origin` out of a rank-5 tensor.
Tensor extract_patch(const Tensor& x, const Dims3& origin, const Dims3& size);
BinaryMask3 extract_patch(const BinaryMask3& m, const Dims3& origin, const Dims3& size);

/// Weighted average of per-cell logits (1, C, patch) into (1, C, dims).
/// `patches` must hold exactly one block per grid cell, in grid order.
Tensor stitch(const std::vector<Tensor>& patches, const PatchGrid& grid);
/// Sum over cells of the normalized blend weights at each voxel (all ones).
Tensor stitch_weight_sum(const PatchGrid& grid);

/// Mirrors a rank-5 tensor along W.
Tensor flip_w(const Tensor& x);
BinaryMask3 flip_w(const BinaryMask3& m);

/// Volume, prior and label of one training example.
struct Sample {
  Tensor volume;      // (1, 1, D, H, W)
  Tensor prior;       // (1, 1, D, H, W) or empty
  BinaryMask3 label;
};

/// Flips every component of the sample along W with probability 0.5, or
/// always when `force` is set. Returns whether a flip happened.
bool random_flip(Sample& s, std::mt19937_64& rng, bool force = false);

WAVECOR_END_NAMESPACE
