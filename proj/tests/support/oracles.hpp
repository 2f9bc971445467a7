#pragma once

// Exhaustive reference implementations used as test oracles. They favour
// obviousness over speed and share no code with the library.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "wavecor/mask.hpp"

namespace wavecor::oracle {

inline BinaryMask3 random_mask(const Dims3& dims, double density, std::mt19937_64& rng,
                               const Spacing& spacing = {1.0, 1.0, 1.0}) {
  std::bernoulli_distribution b(density);
  BinaryMask3 m(dims, spacing);
  for (Index i = 0; i < m.size(); ++i) m.set(i, b(rng));
  return m;
}

inline bool at(const BinaryMask3& m, Index d, Index h, Index w) {
  const auto& n = m.dims();
  if (d < 0 || h < 0 || w < 0 || d >= n[0] || h >= n[1] || w >= n[2]) return false;
  return m(d, h, w);
}

/// Components by repeated min-label sweeps over each voxel's neighbourhood
/// until nothing changes.
inline BinaryMask3 largest_component(const BinaryMask3& m, int connectivity) {
  const auto& n = m.dims();
  const Index none = std::numeric_limits<Index>::max();
  std::vector<Index> label(static_cast<size_t>(m.size()), none);
  for (Index i = 0; i < m.size(); ++i)
    if (m[i]) label[static_cast<size_t>(i)] = i;
  for (bool changed = true; changed;) {
    changed = false;
    for (Index d = 0; d < n[0]; ++d)
      for (Index h = 0; h < n[1]; ++h)
        for (Index w = 0; w < n[2]; ++w) {
          const Index i = (d * n[1] + h) * n[2] + w;
          if (!m[i]) continue;
          for (Index a = -1; a <= 1; ++a)
            for (Index b = -1; b <= 1; ++b)
              for (Index c = -1; c <= 1; ++c) {
                const Index steps = std::abs(a) + std::abs(b) + std::abs(c);
                if (steps == 0 || (connectivity == 6 && steps != 1)) continue;
                if (!at(m, d + a, h + b, w + c)) continue;
                const Index j = ((d + a) * n[1] + (h + b)) * n[2] + (w + c);
                if (label[static_cast<size_t>(j)] < label[static_cast<size_t>(i)]) {
                  label[static_cast<size_t>(i)] = label[static_cast<size_t>(j)];
                  changed = true;
                }
              }
        }
  }
  // A label is the smallest linear index in its component.
  std::vector<Index> size(static_cast<size_t>(m.size()), 0);
  for (Index l : label)
    if (l != none) ++size[static_cast<size_t>(l)];
  Index best = -1;
  for (Index l = 0; l < m.size(); ++l)
    if (size[static_cast<size_t>(l)] > 0 && (best < 0 || size[static_cast<size_t>(l)] > size[static_cast<size_t>(best)]))
      best = l;
  BinaryMask3 out(n, m.spacing());
  for (Index i = 0; i < m.size(); ++i)
    if (best >= 0 && label[static_cast<size_t>(i)] == best) out.set(i, true);
  return out;
}

inline BinaryMask3 slice_contours(const BinaryMask3& m) {
  const auto& n = m.dims();
  BinaryMask3 out(n, m.spacing());
  for (Index d = 0; d < n[0]; ++d)
    for (Index h = 0; h < n[1]; ++h)
      for (Index w = 0; w < n[2]; ++w) {
        if (!m(d, h, w)) continue;
        const bool edge = !at(m, d, h - 1, w) || !at(m, d, h + 1, w) || !at(m, d, h, w - 1) || !at(m, d, h, w + 1);
        if (edge) out.set((d * n[1] + h) * n[2] + w, true);
      }
  return out;
}

inline BinaryMask3 dilate(const BinaryMask3& m, int r) {
  const auto& n = m.dims();
  BinaryMask3 out(n, m.spacing());
  for (Index d = 0; d < n[0]; ++d)
    for (Index h = 0; h < n[1]; ++h)
      for (Index w = 0; w < n[2]; ++w) {
        bool hit = false;
        for (Index a = -r; a <= r && !hit; ++a)
          for (Index b = -r; b <= r && !hit; ++b)
            for (Index c = -r; c <= r && !hit; ++c) hit = at(m, d + a, h + b, w + c);
        if (hit) out.set((d * n[1] + h) * n[2] + w, true);
      }
  return out;
}

inline std::vector<std::array<Index, 3>> boundary_voxels(const BinaryMask3& m) {
  const auto& n = m.dims();
  std::vector<std::array<Index, 3>> out;
  for (Index d = 0; d < n[0]; ++d)
    for (Index h = 0; h < n[1]; ++h)
      for (Index w = 0; w < n[2]; ++w) {
        if (!m(d, h, w)) continue;
        const bool edge = !at(m, d - 1, h, w) || !at(m, d + 1, h, w) || !at(m, d, h - 1, w) ||
                          !at(m, d, h + 1, w) || !at(m, d, h, w - 1) || !at(m, d, h, w + 1);
        if (edge) out.push_back({d, h, w});
      }
  return out;
}

struct Metrics {
  Index tp = 0, fp = 0, fn = 0;
  double dsc = 0, sensitivity = 0, precision = 0;
  std::optional<double> hd95;
};

/// Pairwise surface distances pooled in both directions; 95th percentile by
/// linear interpolation between the order statistics around 0.95 (n - 1).
inline std::optional<double> hd95(const BinaryMask3& a, const BinaryMask3& b, const Spacing& s) {
  const auto ba = boundary_voxels(a), bb = boundary_voxels(b);
  if (ba.empty() && bb.empty()) return 0.0;
  if (ba.empty() || bb.empty()) return std::nullopt;
  auto nearest = [&](const std::array<Index, 3>& p, const std::vector<std::array<Index, 3>>& set) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : set) {
      double d2 = 0;
      for (int k = 0; k < 3; ++k) {
        const double t = static_cast<double>(p[k] - q[k]) * s[k];
        d2 += t * t;
      }
      best = std::min(best, d2);
    }
    return std::sqrt(best);
  };
  std::vector<double> all;
  for (const auto& p : ba) all.push_back(nearest(p, bb));
  for (const auto& p : bb) all.push_back(nearest(p, ba));
  std::sort(all.begin(), all.end());
  const double pos = 0.95 * static_cast<double>(all.size() - 1);
  const auto k = static_cast<size_t>(pos);
  if (k + 1 >= all.size()) return all.back();
  return all[k] + (pos - static_cast<double>(k)) * (all[k + 1] - all[k]);
}

inline Metrics metrics(const BinaryMask3& pred, const BinaryMask3& truth) {
  Metrics r;
  for (Index i = 0; i < truth.size(); ++i) {
    r.tp += pred[i] && truth[i];
    r.fp += pred[i] && !truth[i];
    r.fn += !pred[i] && truth[i];
  }
  if (r.tp + r.fp + r.fn == 0) {
    r.dsc = r.sensitivity = r.precision = 1.0;
    r.hd95 = 0.0;
    return r;
  }
  auto frac = [](Index a, Index b) { return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b); };
  r.dsc = frac(2 * r.tp, 2 * r.tp + r.fp + r.fn);
  r.sensitivity = frac(r.tp, r.tp + r.fn);
  r.precision = frac(r.tp, r.tp + r.fp);
  r.hd95 = hd95(pred, truth, truth.spacing());
  return r;
}

}  // namespace wavecor::oracle
