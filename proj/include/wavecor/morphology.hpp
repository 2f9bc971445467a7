#pragma once

#include "wavecor/mask.hpp"

WAVECOR_BEGIN_NAMESPACE

/// Keeps only the largest connected component. `connectivity` is 6 or 26.
/// Equal sizes resolve to the component holding the lowest linear index.
/// An empty mask comes back empty.
BinaryMask3 largest_component(const BinaryMask3& m, int connectivity = 26);

/// Per axial (D) slice, the foreground voxels with at least one in-plane
/// 4-neighbour in the background. Out-of-volume neighbours count as
/// background.
BinaryMask3 slice_contours(const BinaryMask3& m);

/// Dilation by the cube of half-width `radius_voxels`; radius 0 is identity.
BinaryMask3 dilate(const BinaryMask3& m, int radius_voxels);

/// Expanded myocardial prior: largest component, slice contours, dilation.
BinaryMask3 build_prior(const BinaryMask3& myocardium, int radius_voxels = 2,
                        int connectivity = 26);

WAVECOR_END_NAMESPACE
