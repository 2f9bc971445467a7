#pragma once

#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "wavecor/config.hpp"

WAVECOR_BEGIN_NAMESPACE

using Shape = std::vector<Index>;

std::string shape_string(const Shape& shape);
Index shape_numel(const Shape& shape);

/// Dense row-major array. Rank-5 tensors are laid out (B, C, D, H, W) with W
/// innermost; rank-6 subband tensors are (B, C, 8, D, H, W).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, Real fill = Real(0));
  Tensor(Shape shape, std::vector<Real> data);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor ones(Shape shape) { return Tensor(std::move(shape), Real(1)); }
  static Tensor full(Shape shape, Real v) { return Tensor(std::move(shape), v); }
  static Tensor scalar(Real v) { return Tensor(Shape{1}, v); }

  const Shape& shape() const noexcept { return shape_; }
  int rank() const noexcept { return static_cast<int>(shape_.size()); }
  Index dim(int axis) const { return shape_.at(static_cast<size_t>(axis)); }
  Index numel() const noexcept { return static_cast<Index>(data_.size()); }
  bool empty() const noexcept { return data_.empty(); }

  Real* data() noexcept { return data_.data(); }
  const Real* data() const noexcept { return data_.data(); }
  std::span<Real> values() noexcept { return data_; }
  std::span<const Real> values() const noexcept { return data_; }
  const std::vector<Real>& storage() const noexcept { return data_; }

  Real& operator[](Index i) { return data_[static_cast<size_t>(i)]; }
  Real operator[](Index i) const { return data_[static_cast<size_t>(i)]; }

  // Rank-5 accessor.
  Real& at(Index b, Index c, Index d, Index h, Index w);
  Real at(Index b, Index c, Index d, Index h, Index w) const;

  Real item() const;
  bool all_finite() const;
  void fill(Real v);
  /// Same data, new shape with equal element count.
  Tensor reshaped(Shape shape) const;

 private:
  Shape shape_;
  std::vector<Real> data_;
};

/// Throws DimensionError unless `t` has the given rank.
void require_rank(const Tensor& t, int rank, const char* what);
/// Throws DimensionError naming the first differing axis.
void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

/// Spatial element count D*H*W of a rank-5 tensor.
inline Index spatial_size(const Tensor& t) {
  return t.dim(2) * t.dim(3) * t.dim(4);
}

/// Elementwise max |a - b|.
double max_abs_diff(const Tensor& a, const Tensor& b);
/// Sum of squares accumulated in double.
double sum_squares(const Tensor& t);
/// Elementwise equality of values.
bool values_equal(const Tensor& a, const Tensor& b);

WAVECOR_END_NAMESPACE
