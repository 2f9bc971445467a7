#include "wavecor/morphology.hpp"

#include <algorithm>
#include <vector>

#include "wavecor/errors.hpp"

WAVECOR_BEGIN_NAMESPACE

namespace {

struct Offset {
  Index dd, dh, dw;
};

std::vector<Offset> neighbourhood(int connectivity) {
  std::vector<Offset> out;
  for (Index dd = -1; dd <= 1; ++dd)
    for (Index dh = -1; dh <= 1; ++dh)
      for (Index dw = -1; dw <= 1; ++dw) {
        const Index manhattan = std::abs(dd) + std::abs(dh) + std::abs(dw);
        if (manhattan == 0) continue;
        if (connectivity == 6 && manhattan != 1) continue;
        out.push_back({dd, dh, dw});
      }
  return out;
}

// Running-window max along one axis of half-width r, via prefix counts.
void dilate_axis(std::vector<std::uint8_t>& v, const Dims3& dims, int axis, Index r) {
  const Index n = dims[static_cast<size_t>(axis)];
  const Index stride = axis == 2 ? 1 : (axis == 1 ? dims[2] : dims[1] * dims[2]);
  const Index lines = dims[0] * dims[1] * dims[2] / std::max<Index>(n, 1);
  std::vector<Index> prefix(static_cast<size_t>(n + 1));
  std::vector<std::uint8_t> line(static_cast<size_t>(n));
  for (Index li = 0; li < lines; ++li) {
    // Map line number to the base offset of the line.
    Index base;
    if (axis == 2) {
      base = li * n;
    } else if (axis == 1) {
      base = (li / dims[2]) * dims[1] * dims[2] + (li % dims[2]);
    } else {
      base = li;
    }
    prefix[0] = 0;
    for (Index i = 0; i < n; ++i) {
      line[static_cast<size_t>(i)] = v[static_cast<size_t>(base + i * stride)];
      prefix[static_cast<size_t>(i + 1)] = prefix[static_cast<size_t>(i)] + line[static_cast<size_t>(i)];
    }
    for (Index i = 0; i < n; ++i) {
      const Index lo = std::max<Index>(0, i - r);
      const Index hi = std::min<Index>(n, i + r + 1);
      v[static_cast<size_t>(base + i * stride)] =
          prefix[static_cast<size_t>(hi)] - prefix[static_cast<size_t>(lo)] > 0 ? 1 : 0;
    }
  }
}

}  // namespace

BinaryMask3 largest_component(const BinaryMask3& m, int connectivity) {
  if (connectivity != 6 && connectivity != 26) {
    throw ConfigError("largest_component: connectivity must be 6 or 26");
  }
  const auto offsets = neighbourhood(connectivity);
  const Index n = m.size();
  std::vector<std::int32_t> label(static_cast<size_t>(n), -1);
  std::vector<Index> queue;
  Index best_label = -1, best_size = 0;
  std::int32_t next = 0;
  for (Index seed = 0; seed < n; ++seed) {
    if (!m[seed] || label[static_cast<size_t>(seed)] >= 0) continue;
    const std::int32_t id = next++;
    label[static_cast<size_t>(seed)] = id;
    queue.assign(1, seed);
    for (size_t qi = 0; qi < queue.size(); ++qi) {
      const Index cur = queue[qi];
      const Index d = cur / (m.height() * m.width());
      const Index h = (cur / m.width()) % m.height();
      const Index w = cur % m.width();
      for (const auto& o : offsets) {
        const Index nd = d + o.dd, nh = h + o.dh, nw = w + o.dw;
        if (!m.in_bounds(nd, nh, nw)) continue;
        const Index ni = m.index(nd, nh, nw);
        if (m[ni] && label[static_cast<size_t>(ni)] < 0) {
          label[static_cast<size_t>(ni)] = id;
          queue.push_back(ni);
        }
      }
    }
    const auto size = static_cast<Index>(queue.size());
    if (size > best_size) {
      best_size = size;
      best_label = id;
    }
  }
  BinaryMask3 out(m.dims(), m.spacing());
  for (Index i = 0; i < n; ++i) out.set(i, best_label >= 0 && label[static_cast<size_t>(i)] == best_label);
  return out;
}

BinaryMask3 slice_contours(const BinaryMask3& m) {
  BinaryMask3 out(m.dims(), m.spacing());
  constexpr Index dh[4] = {-1, 1, 0, 0};
  constexpr Index dw[4] = {0, 0, -1, 1};
  for (Index d = 0; d < m.depth(); ++d)
    for (Index h = 0; h < m.height(); ++h)
      for (Index w = 0; w < m.width(); ++w) {
        if (!m(d, h, w)) continue;
        bool edge = false;
        for (int k = 0; k < 4 && !edge; ++k) {
          const Index nh = h + dh[k], nw = w + dw[k];
          edge = !m.in_bounds(d, nh, nw) || !m(d, nh, nw);
        }
        if (edge) out.set(d, h, w, true);
      }
  return out;
}

BinaryMask3 dilate(const BinaryMask3& m, int radius_voxels) {
  if (radius_voxels < 0) throw ConfigError("dilate: radius must be >= 0");
  if (radius_voxels == 0 || m.size() == 0) return m;
  std::vector<std::uint8_t> v(m.values().begin(), m.values().end());
  for (int axis = 0; axis < 3; ++axis) dilate_axis(v, m.dims(), axis, radius_voxels);
  return BinaryMask3(m.dims(), std::move(v), m.spacing());
}

BinaryMask3 build_prior(const BinaryMask3& myocardium, int radius_voxels, int connectivity) {
  return dilate(slice_contours(largest_component(myocardium, connectivity)), radius_voxels);
}

WAVECOR_END_NAMESPACE
