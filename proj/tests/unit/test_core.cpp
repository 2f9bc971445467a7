#include <doctest.h>

#include <cmath>
#include <random>

#include "wavecor/errors.hpp"
#include "wavecor/losses.hpp"
#include "wavecor/optim.hpp"
#include "wavecor/ops.hpp"
#include "wavecor/wavelet.hpp"

using namespace wavecor;

namespace {

Tensor iota(Shape shape, Real start = 0) {
  Tensor t(std::move(shape));
  for (Index i = 0; i < t.numel(); ++i) t[i] = start + static_cast<Real>(i);
  return t;
}

Tensor noise(Shape shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  Tensor t(std::move(shape));
  for (Index i = 0; i < t.numel(); ++i) t[i] = static_cast<Real>(n(rng));
  return t;
}

}  // namespace

TEST_CASE("tensor basics") {
  Tensor t = iota({1, 2, 2, 2, 2});
  CHECK(t.numel() == 16);
  CHECK(t.at(0, 1, 0, 1, 1) == 11);
  CHECK(shape_string(t.shape()) == "(1, 2, 2, 2, 2)");
  CHECK(t.reshaped({4, 4}).rank() == 2);
  CHECK_THROWS_AS(t.reshaped({5, 3}), DimensionError);
  CHECK_THROWS_AS(require_same_shape(t, Tensor({1, 2, 2, 2, 1}), "x"), DimensionError);
  t[3] = std::nanf("");
  CHECK_FALSE(t.all_finite());
}

TEST_CASE("conv3d with a 1x1x1 kernel is a channel mix") {
  Graph g(false);
  const Tensor x = iota({1, 2, 2, 2, 2});
  const Tensor w({1, 2, 1, 1, 1}, std::vector<Real>{2, -1});
  const Tensor b({1}, std::vector<Real>{0.5});
  const Tensor y = conv3d(g, g.constant(x), g.constant(w), g.constant(b)).value();
  REQUIRE(y.shape() == Shape{1, 1, 2, 2, 2});
  for (Index i = 0; i < 8; ++i) CHECK(y[i] == doctest::Approx(2 * x[i] - x[i + 8] + 0.5));
}

TEST_CASE("conv3d 3x3x3 of ones with padding counts neighbours") {
  Graph g(false);
  const Tensor x = Tensor::ones({1, 1, 3, 3, 3});
  const Tensor w = Tensor::ones({1, 1, 3, 3, 3});
  Conv3dOptions opt;
  opt.padding = {1, 1, 1};
  const Tensor y = conv3d(g, g.constant(x), g.constant(w), Var(), opt).value();
  CHECK(y.at(0, 0, 1, 1, 1) == 27);
  CHECK(y.at(0, 0, 0, 0, 0) == 8);
  CHECK(y.at(0, 0, 0, 1, 1) == 18);
  CHECK(conv_output_size(8, 3, 2, 1, 0) == 4);
  CHECK_THROWS_AS(conv_output_size(1, 3, 1, 0, 0), DimensionError);
}

TEST_CASE("grouped conv matches per-group convolutions") {
  Graph g(false);
  const Tensor x = noise({1, 4, 4, 4, 4}, 1);
  const Tensor w = noise({4, 2, 3, 3, 3}, 2);
  Conv3dOptions opt;
  opt.padding = {1, 1, 1};
  opt.groups = 2;
  const Tensor y = conv3d(g, g.constant(x), g.constant(w), Var(), opt).value();
  opt.groups = 1;
  for (Index grp = 0; grp < 2; ++grp) {
    Tensor xg({1, 2, 4, 4, 4}), wg({2, 2, 3, 3, 3});
    for (Index i = 0; i < xg.numel(); ++i) xg[i] = x[grp * xg.numel() + i];
    for (Index i = 0; i < wg.numel(); ++i) wg[i] = w[grp * wg.numel() + i];
    const Tensor yg = conv3d(g, g.constant(xg), g.constant(wg), Var(), opt).value();
    for (Index i = 0; i < yg.numel(); ++i) CHECK(y[grp * yg.numel() + i] == doctest::Approx(yg[i]).epsilon(1e-5));
  }
}

TEST_CASE("batch norm normalizes in training and tracks running stats") {
  Graph g(false);
  const Tensor x = iota({2, 1, 1, 1, 2});  // values 0..3
  Tensor mean = Tensor::zeros({1}), var = Tensor::ones({1});
  BatchNormState st{&mean, &var, 0.1, 0.0};
  const Tensor y = batch_norm(g, g.constant(x), g.constant(Tensor::ones({1})), g.constant(Tensor::zeros({1})), st,
                              true)
                       .value();
  const double sd = std::sqrt(1.25);
  CHECK(y[0] == doctest::Approx(-1.5 / sd));
  CHECK(y[3] == doctest::Approx(1.5 / sd));
  CHECK(mean[0] == doctest::Approx(0.15));
  CHECK(var[0] == doctest::Approx(0.9 + 0.1 * 5.0 / 3.0));
}

TEST_CASE("pooling, channel reductions and upsampling") {
  Graph g(false);
  const Tensor x = iota({1, 2, 2, 2, 2});
  const Tensor p = max_pool3d(g, g.constant(x)).value();
  CHECK(p.shape() == Shape{1, 2, 1, 1, 1});
  CHECK(p[0] == 7);
  CHECK(p[1] == 15);
  CHECK(global_avg_pool(g, g.constant(x)).value()[1] == doctest::Approx(11.5));
  CHECK(channel_mean(g, g.constant(x)).value()[0] == doctest::Approx(4));
  CHECK(channel_max(g, g.constant(x)).value()[0] == 8);

  const Tensor c = Tensor::full({1, 1, 2, 2, 2}, 3);
  const Tensor up = trilinear_upsample(g, g.constant(c)).value();
  CHECK(up.shape() == Shape{1, 1, 4, 4, 4});
  for (Index i = 0; i < up.numel(); ++i) CHECK(up[i] == 3);

  // Along W with half-pixel centres: [0, 1] -> [0, 0.25, 0.75, 1].
  const Tensor r({1, 1, 1, 1, 2}, std::vector<Real>{0, 1});
  Tensor r2({1, 1, 2, 2, 2});
  for (Index i = 0; i < 8; ++i) r2[i] = r[i % 2];
  const Tensor u = trilinear_upsample(g, g.constant(r2)).value();
  CHECK(u.at(0, 0, 0, 0, 0) == 0);
  CHECK(u.at(0, 0, 0, 0, 1) == doctest::Approx(0.25));
  CHECK(u.at(0, 0, 0, 0, 2) == doctest::Approx(0.75));
  CHECK(u.at(0, 0, 0, 0, 3) == 1);
}

TEST_CASE("elementwise ops and backward through a small graph") {
  Parameter a("a", Tensor({3}, std::vector<Real>{1, -2, 3}));
  Parameter s("s", Tensor::scalar(2));
  Graph g;
  const Var y = sum(g, relu(g, scale(g, a.var(), s.var())));
  CHECK(y.value().item() == 8);
  a.zero_grad();
  s.zero_grad();
  g.backward(y);
  CHECK(a.grad()[0] == 2);
  CHECK(a.grad()[1] == 0);
  CHECK(s.grad()[0] == 4);

  Graph h(false);
  const Tensor l =
      lerp(h, h.constant(Tensor::full({2}, 4)), h.constant(Tensor::zeros({2})), h.constant(Tensor::scalar(0.25)))
          .value();
  CHECK(l[0] == 1);
  CHECK(combine(h, h.constant(Tensor::scalar(2)), 3, h.constant(Tensor::scalar(1)), -1).value().item() == 5);
  CHECK(sigmoid(h, h.constant(Tensor::scalar(0))).value().item() == doctest::Approx(0.5));
  CHECK_THROWS_AS(add(h, h.constant(Tensor::zeros({2})), h.constant(Tensor::zeros({3}))), DimensionError);
  CHECK_THROWS_AS(h.backward(h.constant(Tensor::zeros({2}))), UsageError);
}

TEST_CASE("haar subbands of simple signals") {
  const Tensor c = Tensor::full({1, 1, 2, 2, 2}, 1);
  const Tensor s = dwt3(c);
  REQUIRE(s.shape() == Shape{1, 1, 8, 1, 1, 1});
  CHECK(s[0] == doctest::Approx(2 * std::sqrt(2.0)));
  for (Index k = 1; k < 8; ++k) CHECK(std::abs(s[k]) < 1e-6);

  // Alternating along W only excites the subbands that are high along W.
  Tensor alt({1, 1, 2, 2, 2});
  for (Index i = 0; i < 8; ++i) alt[i] = i % 2 == 0 ? 1 : -1;
  const Tensor sa = dwt3(alt);
  for (Index k = 0; k < 8; ++k) {
    if (k == subband_index(0, 0, 1)) CHECK(sa[k] == doctest::Approx(2 * std::sqrt(2.0)));
    else CHECK(std::abs(sa[k]) < 1e-6);
  }
  CHECK_THROWS_AS(dwt3(Tensor({1, 1, 3, 2, 2})), DimensionError);
}

TEST_CASE("wavelet transforms are orthonormal") {
  const Tensor x = noise({2, 3, 4, 6, 8}, 5);
  const Tensor s = dwt3(x);
  CHECK(max_abs_diff(iwt3(s), x) <= 1e-6);
  CHECK(std::abs(sum_squares(s) - sum_squares(x)) <= 1e-5 * sum_squares(x));
  // Adjoints equal the inverses for an orthonormal pair.
  CHECK(max_abs_diff(dwt3_adjoint(s), iwt3(s)) <= 1e-6);
  CHECK(max_abs_diff(iwt3_adjoint(x), dwt3(x)) <= 1e-6);
  // <dwt x, s'> == <x, dwt^T s'>.
  const Tensor s2 = noise(s.shape(), 6);
  const Tensor back = dwt3_adjoint(s2);
  double lhs = 0, rhs = 0;
  for (Index i = 0; i < s.numel(); ++i) lhs += static_cast<double>(s[i]) * s2[i];
  for (Index i = 0; i < x.numel(); ++i) rhs += static_cast<double>(x[i]) * back[i];
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-5));
  const Tensor flat = subbands_to_channels(s);
  CHECK(flat.shape() == Shape{2, 24, 2, 3, 4});
  CHECK(values_equal(channels_to_subbands(flat), s));
}

TEST_CASE("loss values") {
  Graph g(false);
  const Tensor t({1, 1, 1, 1, 2}, std::vector<Real>{1, 0});
  const Tensor z({1, 1, 1, 1, 2}, std::vector<Real>{0, 0});
  // p = 0.5 everywhere.
  CHECK(dice_loss(g, g.constant(z), t, 0.0).value().item() == doctest::Approx(0.5));
  CHECK(bce_loss(g, g.constant(z), t).value().item() == doctest::Approx(std::log(2.0)));
  LossConfig cfg;
  cfg.lambda = 0.25;
  cfg.dice_eps = 1e-12;
  CHECK(total_loss(g, g.constant(z), t, cfg).value().item() == doctest::Approx(0.125 + 0.75 * std::log(2.0)));
  // Confident and correct.
  const Tensor zc({1, 1, 1, 1, 2}, std::vector<Real>{30, -30});
  CHECK(bce_loss(g, g.constant(zc), t).value().item() < 1e-10);
  CHECK(dice_loss(g, g.constant(zc), t).value().item() < 1e-6);
  // Empty target with the default epsilon: loss is small, not undefined.
  const Tensor empty = Tensor::zeros({1, 1, 1, 1, 2});
  const Tensor zn = Tensor::full({1, 1, 1, 1, 2}, -30);
  CHECK(dice_loss(g, g.constant(zn), empty).value().item() == doctest::Approx(0).epsilon(1e-6));
  // Large logits stay finite.
  const Tensor big({1, 1, 1, 1, 2}, std::vector<Real>{-1000, 1000});
  CHECK(std::isfinite(bce_loss(g, g.constant(big), t).value().item()));
}

TEST_CASE("adam first step moves each weight by about lr") {
  Parameter p("p", Tensor({2}, std::vector<Real>{1, 1}));
  OptimConfig cfg;
  Adam opt({&p}, cfg);
  p.zero_grad();
  p.grad()[0] = 10;
  p.grad()[1] = -0.01f;
  opt.step(0.01);
  CHECK(p.value()[0] == doctest::Approx(0.99).epsilon(1e-5));
  CHECK(p.value()[1] == doctest::Approx(1.01).epsilon(1e-5));
  CHECK(opt.steps() == 1);
  CHECK(opt.first_moment(0)[0] == doctest::Approx(1.0));
}

TEST_CASE("cosine schedule and early stopping") {
  CHECK(cosine_lr(0, 60, 0.002) == doctest::Approx(0.002));
  CHECK(cosine_lr(30, 60, 0.002) == doctest::Approx(0.001));
  CHECK(cosine_lr(60, 60, 0.002) == doctest::Approx(0.0).epsilon(1e-12));

  EarlyStopping es(2);
  CHECK_FALSE(es.update(0, 0.5));
  CHECK_FALSE(es.update(1, 0.6));
  CHECK_FALSE(es.update(2, 0.6));  // ties do not count as improvement
  CHECK(es.update(3, 0.55));
  CHECK(es.best_epoch() == 1);
  CHECK(es.best_score() == doctest::Approx(0.6));

  EarlyStopping fifteen(15);
  int stopped = -1;
  for (int epoch = 0; epoch < 100 && stopped < 0; ++epoch)
    if (fifteen.update(epoch, epoch < 10 ? 0.1 * epoch : 0.5)) stopped = epoch;
  CHECK(stopped == 24);
  CHECK(fifteen.best_epoch() == 9);
}
