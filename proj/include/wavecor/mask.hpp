#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "wavecor/config.hpp"

WAVECOR_BEGIN_NAMESPACE

/// Physical voxel size in millimetres along (D, H, W).
using Spacing = std::array<double, 3>;
using Dims3 = std::array<Index, 3>;

/// Binary volume (D, H, W), W innermost, with voxel spacing.
class BinaryMask3 {
 public:
  BinaryMask3() = default;
  BinaryMask3(Dims3 dims, Spacing spacing = {1.0, 1.0, 1.0});
  /// Throws ValidationError("mask must be binary") on values other than 0/1.
  BinaryMask3(Dims3 dims, std::vector<std::uint8_t> values, Spacing spacing = {1.0, 1.0, 1.0});

  const Dims3& dims() const noexcept { return dims_; }
  Index depth() const noexcept { return dims_[0]; }
  Index height() const noexcept { return dims_[1]; }
  Index width() const noexcept { return dims_[2]; }
  Index size() const noexcept { return static_cast<Index>(values_.size()); }
  const Spacing& spacing() const noexcept { return spacing_; }
  void set_spacing(const Spacing& s);

  Index index(Index d, Index h, Index w) const { return (d * dims_[1] + h) * dims_[2] + w; }
  bool in_bounds(Index d, Index h, Index w) const {
    return d >= 0 && h >= 0 && w >= 0 && d < dims_[0] && h < dims_[1] && w < dims_[2];
  }
  std::uint8_t operator()(Index d, Index h, Index w) const { return values_[static_cast<size_t>(index(d, h, w))]; }
  std::uint8_t operator[](Index i) const { return values_[static_cast<size_t>(i)]; }
  void set(Index d, Index h, Index w, bool on) { values_[static_cast<size_t>(index(d, h, w))] = on ? 1 : 0; }
  void set(Index i, bool on) { values_[static_cast<size_t>(i)] = on ? 1 : 0; }

  std::span<const std::uint8_t> values() const noexcept { return values_; }
  Index count() const;
  bool empty_foreground() const { return count() == 0; }
  bool same_geometry(const BinaryMask3& o) const { return dims_ == o.dims_; }

  bool operator==(const BinaryMask3& o) const {
    return dims_ == o.dims_ && values_ == o.values_;
  }

 private:
  Dims3 dims_{0, 0, 0};
  Spacing spacing_{1.0, 1.0, 1.0};
  std::vector<std::uint8_t> values_;
};

/// this ⊆ other, voxelwise.
bool is_subset(const BinaryMask3& a, const BinaryMask3& b);
BinaryMask3 mask_or(const BinaryMask3& a, const BinaryMask3& b);
BinaryMask3 mask_and_not(const BinaryMask3& a, const BinaryMask3& b);

WAVECOR_END_NAMESPACE
