#include "wavecor/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "wavecor/errors.hpp"

WAVECOR_BEGIN_NAMESPACE

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ')';
  return os.str();
}

Index shape_numel(const Shape& shape) {
  Index n = 1;
  for (Index d : shape) {
    if (d < 0) throw DimensionError("negative dimension in shape " + shape_string(shape));
    n *= d;
  }
  return n;
}

Tensor::Tensor(Shape shape, Real fill)
    : shape_(std::move(shape)),
      data_(static_cast<size_t>(shape_numel(shape_)), fill) {}

Tensor::Tensor(Shape shape, std::vector<Real> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (static_cast<Index>(data_.size()) != shape_numel(shape_)) {
    throw DimensionError("data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_string(shape_));
  }
}

Real& Tensor::at(Index b, Index c, Index d, Index h, Index w) {
  const auto& s = shape_;
  return data_[static_cast<size_t>((((b * s[1] + c) * s[2] + d) * s[3] + h) * s[4] + w)];
}

Real Tensor::at(Index b, Index c, Index d, Index h, Index w) const {
  const auto& s = shape_;
  return data_[static_cast<size_t>((((b * s[1] + c) * s[2] + d) * s[3] + h) * s[4] + w)];
}

Real Tensor::item() const {
  if (data_.size() != 1) {
    throw UsageError("item() on tensor of shape " + shape_string(shape_));
  }
  return data_[0];
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](Real v) { return std::isfinite(v); });
}

void Tensor::fill(Real v) { std::fill(data_.begin(), data_.end(), v); }

Tensor Tensor::reshaped(Shape shape) const {
  return Tensor(std::move(shape), data_);
}

void require_rank(const Tensor& t, int rank, const char* what) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(what) + ": expected rank " + std::to_string(rank) +
                         ", got shape " + shape_string(t.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.rank() != b.rank()) {
    throw DimensionError(std::string(what) + ": rank mismatch " + shape_string(a.shape()) +
                         " vs " + shape_string(b.shape()));
  }
  for (int i = 0; i < a.rank(); ++i) {
    if (a.dim(i) != b.dim(i)) {
      throw DimensionError(std::string(what) + ": axis " + std::to_string(i) + " differs (" +
                           std::to_string(a.dim(i)) + " vs " + std::to_string(b.dim(i)) +
                           ")");
    }
  }
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (Index i = 0; i < a.numel(); ++i) {
    m = std::max(m, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
  }
  return m;
}

double sum_squares(const Tensor& t) {
  double s = 0.0;
  for (Real v : t.values()) s += static_cast<double>(v) * static_cast<double>(v);
  return s;
}

bool values_equal(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() && a.storage() == b.storage();
}

WAVECOR_END_NAMESPACE
