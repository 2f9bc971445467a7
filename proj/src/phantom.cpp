#include "wavecor/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <set>

#include "wavecor/errors.hpp"
#include "wavecor/layers.hpp"

WAVECOR_BEGIN_NAMESPACE

namespace {

Point3 operator+(const Point3& a, const Point3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
Point3 operator-(const Point3& a, const Point3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
Point3 operator*(double s, const Point3& a) { return {s * a[0], s * a[1], s * a[2]}; }
double dot(const Point3& a, const Point3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
double norm(const Point3& a) { return std::sqrt(dot(a, a)); }
Point3 cross(const Point3& a, const Point3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
Point3 unit(const Point3& a) {
  const double n = norm(a);
  return n > 0 ? (1.0 / n) * a : Point3{0, 0, 1};
}

class Surface {
 public:
  explicit Surface(const ShellGeometry& s) : s_(s) {}

  Point3 normalized(const Point3& p) const {
    const Point3 q = p - s_.center;
    return {q[0] / s_.outer_radii[0], q[1] / s_.outer_radii[1], q[2] / s_.outer_radii[2]};
  }
  // Radial projection onto the outer surface.
  Point3 project(const Point3& p) const {
    const double rho = s_.normalized_radius(p);
    return s_.center + (1.0 / rho) * (p - s_.center);
  }
  Point3 normal(const Point3& on_surface) const {
    const Point3 u = normalized(on_surface);
    return unit({u[0] / s_.outer_radii[0], u[1] / s_.outer_radii[1], u[2] / s_.outer_radii[2]});
  }

 private:
  ShellGeometry s_;
};

Point3 tangent_part(const Point3& t, const Point3& n) { return unit(t - dot(t, n) * n); }

Point3 rotate_about(const Point3& t, const Point3& n, double angle) {
  return std::cos(angle) * t + std::sin(angle) * cross(n, t);
}

bool inside_volume(const Point3& p, const Dims3& dims, double margin) {
  for (size_t a = 0; a < 3; ++a)
    if (p[a] < margin || p[a] > static_cast<double>(dims[a] - 1) - margin) return false;
  return true;
}

struct Walker {
  const PhantomSpec& spec;
  const Surface& surface;
  std::mt19937_64& rng;
  std::vector<Tube>& out;

  // Grows one branch from surface point `s` with tangent heading `t`, then
  // recurses into children.
  void grow(Point3 s, Point3 t, double r0, int generation) {
    const double step = 0.5;
    const double length = spec.branch_length * std::pow(0.85, generation);
    const double r1 = std::max(spec.min_radius, r0 * spec.taper);
    const int steps = std::max(1, static_cast<int>(std::round(length / step)));
    std::normal_distribution<double> noise(0.0, spec.tortuosity * std::sqrt(step));
    Tube tube;
    for (int k = 0; k <= steps; ++k) {
      const Point3 n = surface.normal(s);
      const double r = r0 + (r1 - r0) * static_cast<double>(k) / steps;
      const Point3 c = s + spec.surface_offset * n;
      if (!inside_volume(c, spec.dims, r + 1.0)) break;
      tube.points.push_back(c);
      tube.radii.push_back(r);
      if (k == steps) break;
      t = rotate_about(tangent_part(t, n), n, noise(rng));
      Point3 next = surface.project(s + step * t);
      const double ud = surface.normalized(next)[0];
      if (std::abs(ud) > spec.max_polar && ud * t[0] > 0) {
        t[0] = -t[0];
        next = surface.project(s + step * t);
      }
      const Point3 n2 = surface.normal(next);
      t = tangent_part(t, n2);
      s = next;
    }
    if (tube.points.size() >= 2) out.push_back(tube);
    if (generation >= spec.depth || tube.points.size() < 2) return;
    std::uniform_real_distribution<double> jitter(-0.2, 0.2);
    const Point3 n = surface.normal(s);
    for (int side : {-1, 1}) {
      const Point3 tc = rotate_about(t, n, side * spec.branch_angle + jitter(rng));
      grow(s, tc, r1, generation + 1);
    }
  }
};

void check_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string("phantom ") + name + " must be positive");
}

}  // namespace

double ShellGeometry::normalized_radius(const Point3& p) const {
  const double a = (p[0] - center[0]) / outer_radii[0];
  const double b = (p[1] - center[1]) / outer_radii[1];
  const double c = (p[2] - center[2]) / outer_radii[2];
  return std::sqrt(a * a + b * b + c * c);
}

void PhantomSpec::validate() const {
  static const char* axes[3] = {"D", "H", "W"};
  for (size_t a = 0; a < 3; ++a) {
    if (dims[a] < 16 || dims[a] % 16 != 0) {
      throw ConfigError(std::string("phantom dims: axis ") + axes[a] + " = " + std::to_string(dims[a]) +
                        " must be a positive multiple of 16");
    }
    check_positive(spacing[a], "spacing");
    check_positive(shell_radii[a], "shell radius");
    if (shell_radii[a] + center_jitter + radius_jitter + surface_offset + max_radius >=
        static_cast<double>(dims[a]) / 2.0) {
      throw ConfigError(std::string("phantom shell does not fit along axis ") + axes[a]);
    }
    if (shell_radii[a] - radius_jitter <= shell_thickness) {
      throw ConfigError("phantom shell thickness must be below every radius");
    }
  }
  check_positive(shell_thickness, "shell_thickness");
  if (roots < 1) throw ConfigError("phantom roots must be >= 1");
  if (depth < 0) throw ConfigError("phantom depth must be >= 0");
  check_positive(branch_length, "branch_length");
  if (!(min_radius >= 1.0) || !(max_radius >= min_radius)) {
    throw ConfigError("phantom vessel radii must satisfy 1 <= min_radius <= max_radius");
  }
  if (!(taper > 0.0 && taper <= 1.0)) throw ConfigError("phantom taper must lie in (0, 1]");
  if (!(tortuosity >= 0.0)) throw ConfigError("phantom tortuosity must be >= 0");
  if (!(surface_offset >= 0.0)) throw ConfigError("phantom surface_offset must be >= 0");
  if (!(max_polar > 0.0 && max_polar <= 1.0)) throw ConfigError("phantom max_polar must lie in (0, 1]");
  if (distractors < 0) throw ConfigError("phantom distractors must be >= 0");
  if (distractors > 0) {
    check_positive(distractor_length, "distractor_length");
    if (!(distractor_radius >= 1.0)) throw ConfigError("phantom distractor_radius must be >= 1");
  }
  if (!(vessel_intensity > myo_intensity && myo_intensity > background_intensity)) {
    throw ConfigError("phantom intensities must satisfy vessel > myocardium > background");
  }
  if (!(cavity_intensity > myo_intensity)) {
    throw ConfigError("phantom cavity intensity must exceed the myocardium's");
  }
  if (!(noise_sigma >= 0.0)) throw ConfigError("phantom noise_sigma must be >= 0");
}

void rasterize_capsule(BinaryMask3& m, const Point3& a, const Point3& b, double radius) {
  const Point3 ab = b - a;
  const double len2 = dot(ab, ab);
  const double r2 = radius * radius;
  Index lo[3], hi[3];
  for (size_t k = 0; k < 3; ++k) {
    lo[k] = std::max<Index>(0, static_cast<Index>(std::floor(std::min(a[k], b[k]) - radius)));
    hi[k] = std::min<Index>(m.dims()[k] - 1, static_cast<Index>(std::ceil(std::max(a[k], b[k]) + radius)));
  }
  for (Index d = lo[0]; d <= hi[0]; ++d)
    for (Index h = lo[1]; h <= hi[1]; ++h)
      for (Index w = lo[2]; w <= hi[2]; ++w) {
        const Point3 p{static_cast<double>(d), static_cast<double>(h), static_cast<double>(w)};
        const Point3 ap = p - a;
        const double t = len2 > 0 ? std::clamp(dot(ap, ab) / len2, 0.0, 1.0) : 0.0;
        const Point3 q = ap - t * ab;
        if (dot(q, q) <= r2) m.set(d, h, w, true);
      }
}

void rasterize_tube(BinaryMask3& m, const Tube& t) {
  if (t.points.size() != t.radii.size()) throw UsageError("tube points and radii differ in length");
  if (t.points.size() == 1) rasterize_capsule(m, t.points[0], t.points[0], t.radii[0]);
  for (size_t i = 1; i < t.points.size(); ++i) {
    rasterize_capsule(m, t.points[i - 1], t.points[i], std::max(t.radii[i - 1], t.radii[i]));
  }
}

VolumeRecord compose_phantom(const PhantomSpec& spec, const ShellGeometry& shell,
                             const std::vector<Tube>& vessels, const std::vector<Tube>& distractors,
                             const std::string& id) {
  VolumeRecord r;
  r.id = id;
  r.seed = spec.seed;
  r.spacing = spec.spacing;
  r.shell = shell;
  r.vessels = vessels;
  r.distractors = distractors;

  const Dims3 dims = spec.dims;
  r.vessel = BinaryMask3(dims, spec.spacing);
  for (const Tube& t : vessels) rasterize_tube(r.vessel, t);
  BinaryMask3 extra(dims, spec.spacing);
  for (const Tube& t : distractors) rasterize_tube(extra, t);

  const Point3 inner{shell.outer_radii[0] - shell.thickness, shell.outer_radii[1] - shell.thickness,
                     shell.outer_radii[2] - shell.thickness};
  ShellGeometry inner_shell = shell;
  inner_shell.outer_radii = inner;

  r.myo = BinaryMask3(dims, spec.spacing);
  r.intensity = Tensor({1, 1, dims[0], dims[1], dims[2]});
  std::mt19937_64 rng(mix64(spec.seed ^ 0x6e6f697365ULL));
  std::normal_distribution<double> noise(0.0, 1.0);
  for (Index d = 0; d < dims[0]; ++d)
    for (Index h = 0; h < dims[1]; ++h)
      for (Index w = 0; w < dims[2]; ++w) {
        const Point3 p{static_cast<double>(d), static_cast<double>(h), static_cast<double>(w)};
        const Index i = r.myo.index(d, h, w);
        double v = spec.background_intensity;
        if (inner_shell.normalized_radius(p) <= 1.0) {
          v = spec.cavity_intensity;
        } else if (shell.normalized_radius(p) <= 1.0 && !r.vessel[i]) {
          v = spec.myo_intensity;
          r.myo.set(i, true);
        }
        if (r.vessel[i] || extra[i]) v = spec.vessel_intensity;
        if (spec.noise_sigma > 0) v += spec.noise_sigma * noise(rng);
        r.intensity[i] = static_cast<Real>(v);
      }
  return r;
}

VolumeRecord generate_phantom(const PhantomSpec& spec, const std::string& id) {
  spec.validate();
  std::mt19937_64 rng(mix64(spec.seed));
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto sym = [&](double a) { return a * (2.0 * u01(rng) - 1.0); };

  ShellGeometry shell;
  for (size_t a = 0; a < 3; ++a) {
    shell.center[a] = static_cast<double>(spec.dims[a] - 1) / 2.0 + sym(spec.center_jitter);
    shell.outer_radii[a] = spec.shell_radii[a] + sym(spec.radius_jitter);
  }
  shell.thickness = spec.shell_thickness;
  const Surface surface(shell);

  std::vector<Tube> vessels;
  Walker walker{spec, surface, rng, vessels};
  for (int k = 0; k < spec.roots; ++k) {
    // Roots start at evenly spread azimuths with random phase.
    const double phi = 2.0 * std::numbers::pi * (static_cast<double>(k) + u01(rng)) / spec.roots;
    const double ud = sym(0.5 * spec.max_polar);
    const double ring = std::sqrt(1.0 - ud * ud);
    const Point3 s = shell.center + Point3{ud * shell.outer_radii[0], ring * std::cos(phi) * shell.outer_radii[1],
                                           ring * std::sin(phi) * shell.outer_radii[2]};
    const Point3 n = surface.normal(s);
    const Point3 t = rotate_about(tangent_part({1.0, 0.0, 0.0}, n), n, sym(std::numbers::pi));
    const double r0 = spec.max_radius - 0.15 * (spec.max_radius - spec.min_radius) * u01(rng);
    walker.grow(s, t, r0, 0);
  }

  std::vector<Tube> distractors;
  for (int k = 0; k < spec.distractors; ++k) {
    Tube t;
    for (int attempt = 0; attempt < 64 && t.points.size() < 2; ++attempt) {
      Point3 p{u01(rng) * static_cast<double>(spec.dims[0] - 1), u01(rng) * static_cast<double>(spec.dims[1] - 1),
               u01(rng) * static_cast<double>(spec.dims[2] - 1)};
      const Point3 dir = unit({sym(1.0), sym(1.0), sym(1.0)});
      t.points.clear();
      t.radii.clear();
      for (double s = 0.0; s <= spec.distractor_length; s += 0.5) {
        const Point3 q = p + s * dir;
        if (!inside_volume(q, spec.dims, 0.0) || shell.normalized_radius(q) < 1.35) break;
        t.points.push_back(q);
        t.radii.push_back(spec.distractor_radius);
      }
    }
    if (t.points.size() >= 2) distractors.push_back(std::move(t));
  }
  return compose_phantom(spec, shell, vessels, distractors, id);
}

std::vector<Dims3> centerline_voxels(const VolumeRecord& r) {
  std::set<Dims3> seen;
  for (const Tube& t : r.vessels)
    for (const Point3& p : t.points) {
      const Dims3 v{static_cast<Index>(std::lround(p[0])), static_cast<Index>(std::lround(p[1])),
                    static_cast<Index>(std::lround(p[2]))};
      if (r.vessel.in_bounds(v[0], v[1], v[2])) seen.insert(v);
    }
  return {seen.begin(), seen.end()};
}

SplitSizes split_sizes(Index n) {
  SplitSizes s;
  s.val = n / 10;
  s.test = n / 5;
  s.train = n - s.val - s.test;
  return s;
}

std::vector<const VolumeRecord*> Dataset::subset(const std::string& name) const {
  std::vector<const VolumeRecord*> out;
  for (size_t i = 0; i < records.size(); ++i)
    if (split[i] == name) out.push_back(&records[i]);
  return out;
}

std::uint64_t case_seed(std::uint64_t base_seed, Index index) {
  return mix64(base_seed * 0x100000001b3ULL + static_cast<std::uint64_t>(index));
}

Dataset make_dataset(Index n, const PhantomSpec& spec, std::uint64_t base_seed) {
  if (n < 10) throw ConfigError("make_dataset: n must be >= 10, got " + std::to_string(n));
  spec.validate();
  const SplitSizes sizes = split_sizes(n);
  Dataset ds;
  ds.base_seed = base_seed;
  for (Index i = 0; i < n; ++i) {
    PhantomSpec s = spec;
    s.seed = case_seed(base_seed, i);
    char id[32];
    std::snprintf(id, sizeof id, "case_%03lld", static_cast<long long>(i));
    ds.records.push_back(generate_phantom(s, id));
    ds.split.push_back(i < sizes.train ? "train" : (i < sizes.train + sizes.val ? "val" : "test"));
  }
  return ds;
}

PhantomSpec resize_spec(const PhantomSpec& spec, const Dims3& dims) {
  double k = std::numeric_limits<double>::infinity();
  for (size_t a = 0; a < 3; ++a) k = std::min(k, static_cast<double>(dims[a]) / static_cast<double>(spec.dims[a]));
  PhantomSpec out = spec;
  out.dims = dims;
  for (double& r : out.shell_radii) r *= k;
  out.center_jitter *= k;
  out.radius_jitter *= k;
  out.branch_length *= k;
  out.distractor_length *= k;
  return out;
}

WAVECOR_END_NAMESPACE
