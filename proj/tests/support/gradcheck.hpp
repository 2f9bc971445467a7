#pragma once

// Central finite-difference gradient checks. Include from translation units
// built against the double-precision library.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "wavecor/autograd.hpp"
#include "wavecor/layers.hpp"
#include "wavecor/ops.hpp"

namespace wavecor::testing {

struct GradReport {
  std::string name;
  double rel_error = 0.0;  // ||analytic - numeric|| / max(||analytic||, ||numeric||)
  Index checked = 0;
  Index skipped = 0;  // coordinates whose difference quotient straddles a kink
};

struct GradCheckOptions {
  double step = 1e-5;
  /// Coordinates probed per tensor; 0 probes all of them.
  Index max_coords = 0;
  std::uint64_t seed = 1;
  /// Two central quotients (steps h and h/2) that disagree by more than this
  /// relative amount mark a coordinate as lying next to a kink.
  double kink_tol = 1e-3;
};

inline Tensor random_tensor(const Shape& shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(shape);
  for (Index i = 0; i < t.numel(); ++i) t[i] = static_cast<Real>(u(rng));
  return t;
}

/// `build` maps the current parameter values to an output of any shape. The
/// scalar under test is sum(output * R) for a fixed random R.
inline std::vector<GradReport> check_gradients(const std::function<Var(Graph&)>& build,
                                               const std::vector<Parameter*>& wrt,
                                               const GradCheckOptions& opt = {}) {
  Tensor projection;
  auto loss_of = [&](Graph& g) {
    const Var out = build(g);
    if (projection.empty()) projection = random_tensor(out.shape(), opt.seed ^ 0x5eedULL);
    return sum(g, mul(g, out, g.constant(projection)));
  };
  auto value = [&] {
    Graph g(false);
    return static_cast<double>(loss_of(g).value()[0]);
  };

  for (Parameter* p : wrt) p->zero_grad();
  {
    Graph g;
    g.backward(loss_of(g));
  }

  std::mt19937_64 rng(opt.seed);
  std::vector<GradReport> reports;
  for (Parameter* p : wrt) {
    GradReport r;
    r.name = p->name();
    Tensor& x = p->value();
    const Tensor analytic = p->grad();
    std::vector<Index> coords(static_cast<size_t>(x.numel()));
    for (Index i = 0; i < x.numel(); ++i) coords[static_cast<size_t>(i)] = i;
    if (opt.max_coords > 0 && x.numel() > opt.max_coords) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(static_cast<size_t>(opt.max_coords));
    }
    double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
    for (Index i : coords) {
      const Real x0 = x[i];
      auto quotient = [&](double h) {
        x[i] = static_cast<Real>(x0 + h);
        const double fp = value();
        x[i] = static_cast<Real>(x0 - h);
        const double fm = value();
        x[i] = x0;
        return (fp - fm) / (2.0 * h);
      };
      const double d1 = quotient(opt.step);
      const double d2 = quotient(opt.step / 2);
      if (std::abs(d1 - d2) > opt.kink_tol * (std::abs(d1) + std::abs(d2)) + 1e-9) {
        ++r.skipped;
        continue;
      }
      const double a = analytic.empty() ? 0.0 : static_cast<double>(analytic[i]);
      diff2 += (a - d1) * (a - d1);
      a2 += a * a;
      n2 += d1 * d1;
      ++r.checked;
    }
    const double denom = std::max({std::sqrt(a2), std::sqrt(n2), 1e-12});
    r.rel_error = std::sqrt(diff2) / denom;
    reports.push_back(r);
  }
  return reports;
}

inline std::vector<Parameter*> parameters_of(const ParameterStore& store) {
  std::vector<Parameter*> out;
  for (const auto& p : store.parameters()) out.push_back(p.get());
  return out;
}

}  // namespace wavecor::testing
