#pragma once

#include <array>

#include "wavecor/autograd.hpp"

WAVECOR_BEGIN_NAMESPACE

/// Number of directional subbands of a single-level 3D decomposition.
inline constexpr Index kSubbands = 8;

/// Subband index for low(0)/high(1) choices along D, H and W. Index 0 is
/// LLL (global structure) and 7 is HHH.
constexpr Index subband_index(int fd, int fh, int fw) { return 4 * fd + 2 * fh + fw; }

/// Two-tap analysis/synthesis filters applied separably along each axis.
struct FilterPair {
  std::array<double, 2> analysis_low;
  std::array<double, 2> analysis_high;
  std::array<double, 2> synthesis_low;
  std::array<double, 2> synthesis_high;

  /// Orthonormal Haar: low = (1, 1)/sqrt(2), high = (1, -1)/sqrt(2).
  static FilterPair haar();
};

// Subband tensors are rank 6: (B, C, 8, D/2, H/2, W/2).

/// Single-level separable decomposition (D, then H, then W) with stride-2
/// decimation. Throws DimensionError on odd spatial extents.
Tensor dwt3(const Tensor& x, const FilterPair& f = FilterPair::haar());
/// Reconstruction from eight subbands; doubles each spatial extent.
Tensor iwt3(const Tensor& s, const FilterPair& f = FilterPair::haar());
/// Transpose of the analysis operator.
Tensor dwt3_adjoint(const Tensor& s, const FilterPair& f = FilterPair::haar());
/// Transpose of the synthesis operator.
Tensor iwt3_adjoint(const Tensor& x, const FilterPair& f = FilterPair::haar());

Var dwt3(Graph& g, const Var& x, const FilterPair& f = FilterPair::haar());
Var iwt3(Graph& g, const Var& s, const FilterPair& f = FilterPair::haar());

/// (B, C, 8, d, h, w) -> (B, 8C, d, h, w), subband-major: channel k*C + c
/// holds subband k of source channel c.
Tensor subbands_to_channels(const Tensor& s);
/// Inverse of subbands_to_channels.
Tensor channels_to_subbands(const Tensor& x);
Var subbands_to_channels(Graph& g, const Var& s);
Var channels_to_subbands(Graph& g, const Var& x);

/// sum_k a[:, k] * flat[:, kC:(k+1)C] for subband-major `flat` (B, 8C, ...)
/// and weights `a` (B, 8, 1, 1, 1). Returns (B, C, ...).
Var subband_weighted_sum(Graph& g, const Var& flat, const Var& a);

WAVECOR_END_NAMESPACE
