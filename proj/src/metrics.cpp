#include "wavecor/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wavecor/errors.hpp"

WAVECOR_BEGIN_NAMESPACE

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double ratio(Index num, Index den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

// Lower envelope of parabolas s^2 (p - q)^2 + f(q) along one line, in place.
// Entries of `f` may be infinite.
void edt_line(double* f, Index n, Index stride, double s2, std::vector<double>& buf,
              std::vector<Index>& v, std::vector<double>& z) {
  buf.resize(static_cast<size_t>(n));
  for (Index i = 0; i < n; ++i) buf[static_cast<size_t>(i)] = f[i * stride];
  v.resize(static_cast<size_t>(n));
  z.resize(static_cast<size_t>(n + 1));
  Index k = -1;
  for (Index q = 0; q < n; ++q) {
    const double fq = buf[static_cast<size_t>(q)];
    if (!std::isfinite(fq)) continue;
    double s = -kInf;
    while (k >= 0) {
      const Index p = v[static_cast<size_t>(k)];
      const double fp = buf[static_cast<size_t>(p)];
      s = ((fq + s2 * static_cast<double>(q * q)) - (fp + s2 * static_cast<double>(p * p))) /
          (2.0 * s2 * static_cast<double>(q - p));
      if (s <= z[static_cast<size_t>(k)]) {
        --k;
        s = -kInf;
      } else {
        break;
      }
    }
    ++k;
    v[static_cast<size_t>(k)] = q;
    z[static_cast<size_t>(k)] = s;
    z[static_cast<size_t>(k + 1)] = kInf;
  }
  if (k < 0) return;  // no finite entries: line stays infinite
  Index j = 0;
  for (Index p = 0; p < n; ++p) {
    while (z[static_cast<size_t>(j + 1)] < static_cast<double>(p)) ++j;
    const Index q = v[static_cast<size_t>(j)];
    const double dq = static_cast<double>(p - q);
    f[p * stride] = s2 * dq * dq + buf[static_cast<size_t>(q)];
  }
}

}  // namespace

BinaryMask3 boundary(const BinaryMask3& m) {
  BinaryMask3 out(m.dims(), m.spacing());
  constexpr Index off[6][3] = {{-1, 0, 0}, {1, 0, 0}, {0, -1, 0}, {0, 1, 0}, {0, 0, -1}, {0, 0, 1}};
  for (Index d = 0; d < m.depth(); ++d)
    for (Index h = 0; h < m.height(); ++h)
      for (Index w = 0; w < m.width(); ++w) {
        if (!m(d, h, w)) continue;
        for (const auto& o : off) {
          const Index nd = d + o[0], nh = h + o[1], nw = w + o[2];
          if (!m.in_bounds(nd, nh, nw) || !m(nd, nh, nw)) {
            out.set(d, h, w, true);
            break;
          }
        }
      }
  return out;
}

std::vector<double> squared_distance_transform(const BinaryMask3& seeds) {
  const Index D = seeds.depth(), H = seeds.height(), W = seeds.width();
  std::vector<double> f(static_cast<size_t>(seeds.size()));
  for (Index i = 0; i < seeds.size(); ++i) f[static_cast<size_t>(i)] = seeds[i] ? 0.0 : kInf;
  const Spacing& sp = seeds.spacing();
  std::vector<double> buf, z;
  std::vector<Index> v;
  for (Index d = 0; d < D; ++d)
    for (Index h = 0; h < H; ++h) edt_line(f.data() + (d * H + h) * W, W, 1, sp[2] * sp[2], buf, v, z);
  for (Index d = 0; d < D; ++d)
    for (Index w = 0; w < W; ++w) edt_line(f.data() + d * H * W + w, H, W, sp[1] * sp[1], buf, v, z);
  for (Index h = 0; h < H; ++h)
    for (Index w = 0; w < W; ++w) edt_line(f.data() + h * W + w, D, H * W, sp[0] * sp[0], buf, v, z);
  return f;
}

std::vector<double> surface_distances(const BinaryMask3& from, const BinaryMask3& to) {
  if (!from.same_geometry(to)) throw DimensionError("surface_distances: mask dimensions differ");
  const BinaryMask3 bf = boundary(from);
  BinaryMask3 bt = boundary(to);
  bt.set_spacing(from.spacing());
  const std::vector<double> dt = squared_distance_transform(bt);
  std::vector<double> out;
  for (Index i = 0; i < bf.size(); ++i)
    if (bf[i]) out.push_back(std::sqrt(dt[static_cast<size_t>(i)]));
  return out;
}

double percentile_inclusive(std::vector<double> values, double q) {
  if (values.empty()) throw UsageError("percentile of an empty set");
  if (!(q >= 0.0 && q <= 1.0)) throw UsageError("percentile q must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

std::optional<double> hd95(const BinaryMask3& pred, const BinaryMask3& truth) {
  const bool pe = pred.empty_foreground(), te = truth.empty_foreground();
  if (pe && te) return 0.0;
  if (pe || te) return std::nullopt;
  BinaryMask3 p = pred;
  p.set_spacing(truth.spacing());
  std::vector<double> all = surface_distances(p, truth);
  const std::vector<double> back = surface_distances(truth, p);
  all.insert(all.end(), back.begin(), back.end());
  return percentile_inclusive(std::move(all), 0.95);
}

SegMetrics compute_metrics(const BinaryMask3& pred, const BinaryMask3& truth) {
  if (!pred.same_geometry(truth)) {
    throw DimensionError("metrics: prediction and truth dimensions differ");
  }
  SegMetrics m;
  for (Index i = 0; i < truth.size(); ++i) {
    const bool p = pred[i], t = truth[i];
    m.tp += p && t;
    m.fp += p && !t;
    m.fn += !p && t;
  }
  if (m.tp + m.fp + m.fn == 0) {
    m.dsc = m.sensitivity = m.precision = 1.0;
    m.hd95_mm = 0.0;
    return m;
  }
  m.dsc = ratio(2 * m.tp, 2 * m.tp + m.fp + m.fn);
  m.sensitivity = ratio(m.tp, m.tp + m.fn);
  m.precision = ratio(m.tp, m.tp + m.fp);
  m.hd95_mm = hd95(pred, truth);
  return m;
}

MetricSummary summarize(const std::vector<SegMetrics>& per_case) {
  MetricSummary s;
  s.cases = static_cast<Index>(per_case.size());
  if (per_case.empty()) return s;
  double hd = 0.0;
  Index defined = 0;
  for (const auto& m : per_case) {
    s.dsc += m.dsc;
    s.sensitivity += m.sensitivity;
    s.precision += m.precision;
    if (m.hd95_mm) {
      hd += *m.hd95_mm;
      ++defined;
    }
  }
  const auto n = static_cast<double>(per_case.size());
  s.dsc /= n;
  s.sensitivity /= n;
  s.precision /= n;
  s.undefined_hd95 = s.cases - defined;
  if (defined > 0) s.hd95_mm = hd / static_cast<double>(defined);
  return s;
}

WAVECOR_END_NAMESPACE
