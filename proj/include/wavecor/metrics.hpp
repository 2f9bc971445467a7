#pragma once

#include <array>
#include <optional>
#include <vector>

#include "wavecor/mask.hpp"

WAVECOR_BEGIN_NAMESPACE

struct SegMetrics {
  double dsc = 0.0;
  double sensitivity = 0.0;
  double precision = 0.0;
  /// Undefined when exactly one of the two masks is empty.
  std::optional<double> hd95_mm;
  Index tp = 0, fp = 0, fn = 0;
};

/// Overlap scores and HD95 of `pred` against `truth`, using truth's spacing.
/// Zero denominators give 0, except both masks empty: DSC, sensitivity and
/// precision 1 and HD95 0.
SegMetrics compute_metrics(const BinaryMask3& pred, const BinaryMask3& truth);

/// Foreground voxels with at least one 6-neighbour in the background; voxels
/// outside the volume count as background.
BinaryMask3 boundary(const BinaryMask3& m);

/// Exact squared Euclidean distance (mm^2) from every voxel to the nearest
/// foreground voxel of `seeds`, with anisotropic spacing. Infinite when
/// `seeds` is empty.
std::vector<double> squared_distance_transform(const BinaryMask3& seeds);

/// Distances (mm) from each boundary voxel of `from` to the boundary of `to`,
/// in linear-index order.
std::vector<double> surface_distances(const BinaryMask3& from, const BinaryMask3& to);

/// Percentile with linear interpolation between order statistics at
/// position q * (n - 1). `q` in [0, 1]; `values` nonempty.
double percentile_inclusive(std::vector<double> values, double q);

/// 95th percentile of the pooled bidirectional boundary distances.
std::optional<double> hd95(const BinaryMask3& pred, const BinaryMask3& truth);

/// Mean of each field over cases; HD95 averages only the defined values.
struct MetricSummary {
  double dsc = 0.0, sensitivity = 0.0, precision = 0.0;
  std::optional<double> hd95_mm;
  Index cases = 0;
  Index undefined_hd95 = 0;
};
MetricSummary summarize(const std::vector<SegMetrics>& per_case);

WAVECOR_END_NAMESPACE
