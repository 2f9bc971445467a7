#include "wavecor/mask.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wavecor/errors.hpp"

WAVECOR_BEGIN_NAMESPACE

namespace {

void check_spacing(const Spacing& s) {
  for (double v : s) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ValidationError("voxel spacing must be strictly positive and finite");
    }
  }
}

Index dims_product(const Dims3& d) {
  for (Index v : d)
    if (v < 0) throw DimensionError("negative mask dimension");
  return d[0] * d[1] * d[2];
}

void require_geometry(const BinaryMask3& a, const BinaryMask3& b, const char* what) {
  if (!a.same_geometry(b)) throw DimensionError(std::string(what) + ": mask dimensions differ");
}

}  // namespace

BinaryMask3::BinaryMask3(Dims3 dims, Spacing spacing)
    : dims_(dims), spacing_(spacing), values_(static_cast<size_t>(dims_product(dims)), 0) {
  check_spacing(spacing_);
}

BinaryMask3::BinaryMask3(Dims3 dims, std::vector<std::uint8_t> values, Spacing spacing)
    : dims_(dims), spacing_(spacing), values_(std::move(values)) {
  check_spacing(spacing_);
  if (static_cast<Index>(values_.size()) != dims_product(dims_)) {
    throw DimensionError("mask data length " + std::to_string(values_.size()) +
                         " does not match dimensions");
  }
  if (std::any_of(values_.begin(), values_.end(), [](std::uint8_t v) { return v > 1; })) {
    throw ValidationError("mask must be binary");
  }
}

void BinaryMask3::set_spacing(const Spacing& s) {
  check_spacing(s);
  spacing_ = s;
}

Index BinaryMask3::count() const {
  return static_cast<Index>(std::count(values_.begin(), values_.end(), std::uint8_t{1}));
}

bool is_subset(const BinaryMask3& a, const BinaryMask3& b) {
  require_geometry(a, b, "is_subset");
  for (Index i = 0; i < a.size(); ++i)
    if (a[i] && !b[i]) return false;
  return true;
}

BinaryMask3 mask_or(const BinaryMask3& a, const BinaryMask3& b) {
  require_geometry(a, b, "mask_or");
  BinaryMask3 out(a.dims(), a.spacing());
  for (Index i = 0; i < a.size(); ++i) out.set(i, a[i] || b[i]);
  return out;
}

BinaryMask3 mask_and_not(const BinaryMask3& a, const BinaryMask3& b) {
  require_geometry(a, b, "mask_and_not");
  BinaryMask3 out(a.dims(), a.spacing());
  for (Index i = 0; i < a.size(); ++i) out.set(i, a[i] && !b[i]);
  return out;
}

WAVECOR_END_NAMESPACE
