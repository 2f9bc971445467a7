#include <doctest.h>

#include <cmath>
#include <limits>

#include "wavecor/errors.hpp"
#include "wavecor/losses.hpp"
#include "wavecor/phantom.hpp"
#include "wavecor/trainer.hpp"

using namespace wavecor;

namespace {

Case small_case(std::uint64_t seed, Index dim = 32) {
  PhantomSpec spec = resize_spec(PhantomSpec{}, {dim, dim, dim});
  spec.seed = seed;
  return prepare_case(generate_phantom(spec, "c" + std::to_string(seed)), 2);
}

NetworkConfig small_network() {
  NetworkConfig cfg;
  cfg.base_width = 4;
  cfg.scales = 2;
  return cfg;
}

}  // namespace

TEST_CASE("prepared cases are normalized") {
  const Case c = small_case(1);
  float lo = 1e9f, hi = -1e9f;
  for (Index i = 0; i < c.volume.numel(); ++i) {
    lo = std::min(lo, c.volume[i]);
    hi = std::max(hi, c.volume[i]);
  }
  CHECK(lo == 0.0f);
  CHECK(hi == 1.0f);
  const Tensor flat = normalize_minmax(Tensor::full({1, 1, 2, 2, 2}, 4));
  for (Index i = 0; i < flat.numel(); ++i) CHECK(flat[i] == 0);
}

TEST_CASE("tiny overfit drives the loss down") {
  const Case c = small_case(3);
  Network net(small_network(), 1);
  std::vector<Parameter*> params;
  for (const auto& p : net.store().parameters()) params.push_back(p.get());
  OptimConfig oc;
  Adam opt(params, oc);
  const Sample s{c.volume, c.prior, c.label};
  double first = 0, last = 0;
  for (int step = 0; step < 200; ++step) {
    const double loss = train_step(net, opt, s, LossConfig{}, 0.005);
    if (step == 0) first = loss;
    last = loss;
  }
  INFO("first " << first << " last " << last);
  CHECK(last < 0.2);
  CHECK(last < first);
}

TEST_CASE("every variant runs forward and backward") {
  const Case c = small_case(4);
  for (const std::string& name : variant_names()) {
    NetworkConfig cfg = make_variant(name, small_network());
    Network net(cfg, 2);
    std::vector<Parameter*> params;
    for (const auto& p : net.store().parameters()) params.push_back(p.get());
    Adam opt(params, OptimConfig{});
    const double loss = train_step(net, opt, Sample{c.volume, c.prior, c.label}, LossConfig{}, 0.001);
    CHECK(std::isfinite(loss));
    CHECK(cfg.variant() == name);
  }
}

TEST_CASE("input divisibility is checked") {
  Network net(small_network(), 1);
  Graph g(false);
  CHECK_THROWS_AS(net.forward(g, Tensor({1, 1, 10, 16, 16}), Tensor({1, 1, 10, 16, 16}), Mode::kEval),
                  ConfigError);
  NetworkConfig bad;
  bad.scales = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("non-finite loss aborts and names the op") {
  const Case c = small_case(5);
  Network net(small_network(), 1);
  net.store().parameters()[0]->value()[0] = std::numeric_limits<Real>::quiet_NaN();
  TrainConfig cfg;
  cfg.network = small_network();
  cfg.optim.epochs = 1;
  cfg.patch.size = {32, 32, 32};
  try {
    train(net, {c}, {c}, cfg);
    FAIL("training accepted a NaN loss");
  } catch (const TrainingError& e) {
    CHECK(std::string(e.what()).find("conv3d") != std::string::npos);
  }
}

TEST_CASE("short training is deterministic and keeps the best epoch") {
  const Case a = small_case(6), b = small_case(7), v = small_case(8);
  TrainConfig cfg;
  cfg.network = small_network();
  cfg.optim.epochs = 3;
  cfg.patch.size = {16, 16, 16};
  cfg.patch.overlap = 4;
  cfg.patches_per_case = 2;
  cfg.seed = 11;
  Network n1(cfg.network, 11), n2(cfg.network, 11);
  const TrainResult r1 = train(n1, {a, b}, {v}, cfg);
  const TrainResult r2 = train(n2, {a, b}, {v}, cfg);
  REQUIRE(r1.history.size() == 3);
  for (size_t i = 0; i < 3; ++i) {
    CHECK(r1.history[i].train_loss == r2.history[i].train_loss);
    CHECK(r1.history[i].val_dsc == r2.history[i].val_dsc);
  }
  CHECK(r1.history[0].lr == doctest::Approx(cfg.optim.lr));
  double best = -1;
  for (const auto& e : r1.history) best = std::max(best, e.val_dsc);
  CHECK(r1.best_val_dsc == best);
  // Restored weights reproduce the best validation score.
  const MetricSummary s = summarize(evaluate_cases(n1, {v}, cfg.patch));
  CHECK(s.dsc == doctest::Approx(r1.best_val_dsc).epsilon(1e-9));
}
