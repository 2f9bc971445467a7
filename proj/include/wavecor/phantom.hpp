#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "wavecor/mask.hpp"
#include "wavecor/tensor.hpp"

WAVECOR_BEGIN_NAMESPACE

using Point3 = std::array<double, 3>;  // voxel coordinates (d, h, w)

/// Synthetic cardiac phantom: an ellipsoidal myocardial shell around a bright
/// blood pool, a branching vessel tree running just outside the shell, and a
/// few vessel-like tubes far from the heart that are not labelled.
struct PhantomSpec {
  Dims3 dims{48, 48, 48};
  Spacing spacing{1.0, 1.0, 1.0};

  // Shell, in voxels. Radii are outer radii along (D, H, W).
  Point3 shell_radii{15.0, 17.0, 16.0};
  double shell_thickness = 3.0;
  double center_jitter = 1.5;
  double radius_jitter = 1.0;

  // Vessel tree.
  int roots = 2;
  int depth = 2;                // branching generations below each root
  double branch_length = 16.0;  // arc length of a root branch
  double max_radius = 2.0;
  double min_radius = 1.0;
  double taper = 0.8;           // radius ratio from branch start to end
  double tortuosity = 0.25;     // heading noise per unit length (radians)
  double branch_angle = 0.7;    // radians between parent and child headings
  double surface_offset = 1.0;  // centerline distance outside the shell
  double max_polar = 0.75;      // bound on |normalized D| of the centerline

  // Unlabelled distractor tubes.
  int distractors = 2;
  double distractor_radius = 1.5;
  double distractor_length = 20.0;

  // Intensities.
  double vessel_intensity = 0.9;
  double cavity_intensity = 0.7;
  double myo_intensity = 0.45;
  double background_intensity = 0.1;
  double noise_sigma = 0.08;

  std::uint64_t seed = 0;

  /// Throws ConfigError on invalid fields.
  void validate() const;
};

/// Polyline with one radius per point.
struct Tube {
  std::vector<Point3> points;
  std::vector<double> radii;
};

struct ShellGeometry {
  Point3 center{0, 0, 0};
  Point3 outer_radii{0, 0, 0};
  double thickness = 0.0;

  /// |(p - c) / r_outer|: 1 on the outer surface.
  double normalized_radius(const Point3& p) const;
};

struct VolumeRecord {
  std::string id;
  std::uint64_t seed = 0;
  Tensor intensity;  // (1, 1, D, H, W), raw units
  BinaryMask3 vessel;
  BinaryMask3 myo;
  Spacing spacing{1.0, 1.0, 1.0};

  ShellGeometry shell;
  std::vector<Tube> vessels;
  std::vector<Tube> distractors;
};

/// Fully determined by `spec` (including its seed).
VolumeRecord generate_phantom(const PhantomSpec& spec, const std::string& id = "phantom");

/// Assembles masks and intensities for a given shell and tube set.
VolumeRecord compose_phantom(const PhantomSpec& spec, const ShellGeometry& shell,
                             const std::vector<Tube>& vessels, const std::vector<Tube>& distractors,
                             const std::string& id);

/// Marks every voxel whose center lies within `radius` of segment [a, b].
void rasterize_capsule(BinaryMask3& m, const Point3& a, const Point3& b, double radius);
/// Union of capsules between consecutive points; each segment takes the
/// larger of its endpoint radii.
void rasterize_tube(BinaryMask3& m, const Tube& t);

/// Rounded, in-bounds, deduplicated centerline voxels of every vessel tube.
std::vector<Dims3> centerline_voxels(const VolumeRecord& r);

struct SplitSizes {
  Index train = 0, val = 0, test = 0;
};
/// val = floor(n / 10), test = floor(n / 5), the rest trains.
SplitSizes split_sizes(Index n);

struct Dataset {
  std::vector<VolumeRecord> records;
  std::vector<std::string> split;  // "train", "val" or "test" per record
  std::uint64_t base_seed = 0;

  std::vector<const VolumeRecord*> subset(const std::string& name) const;
};

/// Seed of case `index` derived from the base seed.
std::uint64_t case_seed(std::uint64_t base_seed, Index index);

/// n phantoms with per-index seeds; the first records train, then val, then
/// test. Requires n >= 10.
Dataset make_dataset(Index n, const PhantomSpec& spec, std::uint64_t base_seed);

/// Copy of `spec` resized to `dims`: shell radii, jitter and tube lengths
/// scale with the smallest axis ratio, vessel radii are kept.
PhantomSpec resize_spec(const PhantomSpec& spec, const Dims3& dims);

WAVECOR_END_NAMESPACE
