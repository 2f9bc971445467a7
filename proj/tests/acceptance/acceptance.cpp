// Acceptance checks, one pass/fail line per criterion.
//
//   wavecor_acceptance [--criterion N]...
//
// Without --criterion every check runs. Exit status is 0 only if all of the
// selected checks pass.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <functional>
#include <limits>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "criteria.hpp"
#include "support/oracles.hpp"
#include "wavecor/cli.hpp"
#include "wavecor/errors.hpp"
#include "wavecor/metrics.hpp"
#include "wavecor/morphology.hpp"
#include "wavecor/report.hpp"
#include "wavecor/trainer.hpp"
#include "wavecor/volume_io.hpp"
#include "wavecor/wavelet.hpp"

using namespace wavecor;
using acceptance::Outcome;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

std::string fixed(double v, int digits = 4) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

Tensor normal_tensor(const Shape& shape, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Tensor t(shape);
  for (Index i = 0; i < t.numel(); ++i) t[i] = static_cast<Real>(n(rng));
  return t;
}

fs::path scratch_dir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("wavecor_acceptance_" + tag + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// 1. Wavelet round trip and energy preservation.
Outcome wavelet_round_trip() {
  const auto t0 = Clock::now();
  double max_err = 0.0, max_energy = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    auto pick = [&](Index lo, Index hi) { return std::uniform_int_distribution<Index>(lo, hi)(rng); };
    const Shape shape{pick(1, 2), pick(1, 3), 2 * pick(1, 8), 2 * pick(1, 8), 2 * pick(1, 8)};
    const Tensor x = normal_tensor(shape, rng);
    const Tensor s = dwt3(x);
    const Tensor y = iwt3(s);
    double ex = 0.0, es = 0.0;
    for (Index i = 0; i < x.numel(); ++i) {
      max_err = std::max(max_err, std::abs(static_cast<double>(y[i]) - x[i]));
      ex += static_cast<double>(x[i]) * x[i];
    }
    for (Index i = 0; i < s.numel(); ++i) es += static_cast<double>(s[i]) * s[i];
    max_energy = std::max(max_energy, std::abs(es - ex) / ex);
  }
  std::ostringstream sink;
  const int code = run_cli({"wavelet-check"}, sink, sink);
  const double elapsed = seconds_since(t0);
  const bool pass = max_err <= 1e-6 && max_energy <= 1e-5 && code == 0 && elapsed < 5.0;
  return {pass, "20 seeds up to 2x3x16x16x16: max abs error " + sci(max_err) + " (<= 1e-6), energy error " +
                    sci(max_energy) + " (<= 1e-5), wavelet-check exit " + std::to_string(code) + ", " +
                    fixed(elapsed, 2) + " s (< 5 s)"};
}

// 2. Finite-difference gradients.
Outcome gradients() {
  const auto t0 = Clock::now();
  Outcome o = acceptance::gradient_suite();
  const double elapsed = seconds_since(t0);
  o.pass = o.pass && elapsed < 120.0;
  o.detail += ", " + fixed(elapsed, 1) + " s (< 120 s)";
  return o;
}

// 3. Metrics against the exhaustive oracle.
Outcome metrics_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int mismatches = 0;
  double hd_err = 0.0;
  for (int k = 0; k < 100; ++k) {
    Spacing sp{1.0, 1.0, 1.0};
    if (k % 2 == 1) sp = {0.5 + 1.5 * u(rng), 0.5 + 1.5 * u(rng), 0.5 + 1.5 * u(rng)};
    const double dp = k % 10 == 0 ? 0.0 : 0.05 + 0.5 * u(rng);
    const double dt = k % 15 == 0 ? 0.0 : 0.05 + 0.5 * u(rng);
    const BinaryMask3 pred = oracle::random_mask({8, 8, 8}, dp, rng, sp);
    const BinaryMask3 truth = oracle::random_mask({8, 8, 8}, dt, rng, sp);
    const SegMetrics m = compute_metrics(pred, truth);
    const oracle::Metrics r = oracle::metrics(pred, truth);
    bool ok = m.tp == r.tp && m.fp == r.fp && m.fn == r.fn && m.dsc == r.dsc && m.sensitivity == r.sensitivity &&
              m.precision == r.precision && m.hd95_mm.has_value() == r.hd95.has_value();
    if (ok && m.hd95_mm) {
      const double e = std::abs(*m.hd95_mm - *r.hd95);
      hd_err = std::max(hd_err, e);
      ok = e <= 1e-9;
    }
    mismatches += !ok;
  }
  BinaryMask3 a({8, 8, 8}), b({8, 8, 8});
  a.set(4, 4, 1, true);
  b.set(4, 4, 4, true);
  const auto single = compute_metrics(a, b).hd95_mm;
  const double elapsed = seconds_since(t0);
  const bool pass = mismatches == 0 && single && *single == 3.0 && elapsed < 30.0;
  return {pass, "100 random 8^3 pairs: " + std::to_string(mismatches) + " mismatches, max HD95 deviation " +
                    sci(hd_err) + " (<= 1e-9); single voxels 3 mm apart give HD95 " +
                    (single ? fixed(*single, 6) : std::string("undefined")) + " (== 3.0); " + fixed(elapsed, 2) +
                    " s (< 30 s)"};
}

// 4. Toggle equivalences and the ablation matrix.
Outcome toggles() {
  std::ostringstream d;
  bool pass = true;

  // Scale = 0 against the prior path switched off.
  NetworkConfig cfg;
  cfg.base_width = 4;
  cfg.scales = 3;
  Network with(cfg, 17);
  with.prior_projector()->scale().value()[0] = 0;
  NetworkConfig off = cfg;
  off.use_mpe = false;
  Network without(off, 17);
  std::mt19937_64 rng(4);
  const Tensor x = normal_tensor({1, 1, 16, 16, 16}, rng);
  Tensor prior({1, 1, 16, 16, 16});
  for (Index i = 0; i < prior.numel(); ++i) prior[i] = static_cast<Real>(rng() % 2);
  bool identical = true;
  for (Mode mode : {Mode::kEval, Mode::kTrain}) {
    Graph g1(false), g2(false);
    const Tensor y1 = with.forward(g1, x, prior, mode).value();
    const Tensor y2 = without.forward(g2, x, Tensor(), mode).value();
    identical = identical && y1.shape() == y2.shape() &&
                std::memcmp(y1.data(), y2.data(), sizeof(Real) * static_cast<size_t>(y1.numel())) == 0;
  }
  pass = pass && identical;
  d << "Scale=0 output " << (identical ? "bit-identical" : "DIFFERS") << " to prior path off";

  // alpha -> 0 makes each decoder up-step the inverse transform of the skip subbands.
  Network net(cfg, 23);
  NetworkTrace trace;
  {
    Graph g(false);
    net.forward(g, x, prior, Mode::kEval, &trace);
  }
  double alpha_err = 0.0;
  for (int stage = 1; stage <= cfg.scales; ++stage) {
    const WaveletUpsample* up = net.upsampler(stage);
    up->alpha_raw().value()[0] = -60;
    Graph g(false);
    const Tensor& deep = stage == cfg.scales ? trace.bottleneck : trace.decoder[static_cast<size_t>(stage)];
    const Tensor& w = trace.subbands[static_cast<size_t>(stage - 1)];
    const Tensor y = up->forward(g, g.constant(deep), g.constant(w)).value();
    const Tensor ref = iwt3(w);
    for (Index i = 0; i < y.numel(); ++i) alpha_err = std::max(alpha_err, std::abs(static_cast<double>(y[i]) - ref[i]));
  }
  pass = pass && alpha_err <= 1e-6;
  d << "; alpha->0 up-step vs iwt3(skip subbands) max error " << sci(alpha_err) << " (<= 1e-6)";

  // The six toggle variants.
  std::map<std::string, Index> counts;
  std::set<Index> distinct;
  std::set<std::set<std::string>> layouts;
  bool tags = true;
  for (const std::string& name : variant_names()) {
    const NetworkConfig v = make_variant(name);
    Network n(v, 1);
    counts[name] = n.parameter_count();
    distinct.insert(n.parameter_count());
    std::set<std::string> names;
    for (const auto& p : n.store().parameters()) names.insert(p->name());
    layouts.insert(names);
    const int on = int(v.use_mpe) + int(v.use_rfe) + int(v.use_msff) + int(v.use_wt_iwt);
    tags = tags && v.variant() == name && on == (name == "Baseline" ? 0 : name == "Full" ? 4 : 1);
  }
  Index sum_deltas = 0;
  bool above_baseline = true;
  for (const char* e : {"E1", "E2", "E3", "E4"}) {
    sum_deltas += counts[e] - counts["Baseline"];
    above_baseline = above_baseline && counts[e] > counts["Baseline"] && counts[e] < counts["Full"];
  }
  const bool additive = counts["Full"] - counts["Baseline"] == sum_deltas;
  const bool matrix_ok = variant_names().size() == 6 && distinct.size() == 6 && layouts.size() == 6 && tags &&
                         above_baseline && additive;
  pass = pass && matrix_ok;
  d << "; 6 variants, " << distinct.size() << " distinct parameter counts (";
  for (const auto& name : variant_names()) d << name << " " << counts[name] << (name == "Full" ? "" : ", ");
  d << "), module deltas " << (additive ? "add up" : "DO NOT add up") << " to Full - Baseline";
  return {pass, d.str()};
}

struct DeskRun {
  MetricSummary test;
  TrainResult training;
  double seconds = 0.0;
};

DeskRun desk_run(const std::string& variant, std::uint64_t seed) {
  const auto t0 = Clock::now();
  const Dataset ds = make_dataset(30, PhantomSpec{}, seed);
  std::vector<Case> train_cases, val_cases, test_cases;
  for (size_t i = 0; i < ds.records.size(); ++i) {
    Case c = prepare_case(ds.records[i], 2);
    auto& dst = ds.split[i] == "train" ? train_cases : ds.split[i] == "val" ? val_cases : test_cases;
    dst.push_back(std::move(c));
  }
  TrainConfig cfg;
  cfg.network = make_variant(variant);
  cfg.seed = seed;
  cfg.threads = threads_from_env(1);
  Network net(cfg.network, seed);
  DeskRun r;
  r.training = train(net, train_cases, val_cases, cfg, [&](const EpochRecord& e) {
    std::cerr << "  [" << variant << " seed " << seed << "] epoch " << e.epoch << " loss " << fixed(e.train_loss)
              << " val_dsc " << fixed(e.val_dsc) << " (" << fixed(seconds_since(t0), 0) << " s)\n";
  });
  r.test = summarize(evaluate_cases(net, test_cases, cfg.patch, cfg.threads));
  r.seconds = seconds_since(t0);
  return r;
}

// 5. Desk-scale training of the full model.
Outcome desk_training() {
  const DeskRun r = desk_run("Full", 1);
  const double hd = r.test.hd95_mm.value_or(std::numeric_limits<double>::infinity());
  const bool pass = r.test.dsc >= 0.85 && hd <= 3.0 && r.test.undefined_hd95 == 0 && r.seconds <= 1800.0;
  return {pass, "30 phantoms 48^3, C=8, 4 scales, " + std::to_string(r.training.history.size()) +
                    " epochs (best " + std::to_string(r.training.best_epoch) + "): test DSC " + fixed(r.test.dsc) +
                    " (>= 0.85), HD95 " + fixed(hd, 3) + " voxels (<= 3), " + fixed(r.seconds / 60.0, 1) +
                    " min (<= 30)"};
}

// 6. Full model against the baseline over three seeds.
Outcome ablation_direction() {
  double full = 0.0, base = 0.0;
  std::ostringstream d;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const DeskRun f = desk_run("Full", seed);
    const DeskRun b = desk_run("Baseline", seed);
    full += f.test.dsc / 3.0;
    base += b.test.dsc / 3.0;
    d << "seed " << seed << " Full " << fixed(f.test.dsc) << " Baseline " << fixed(b.test.dsc) << "; ";
  }
  d << "mean Full " << fixed(full) << " vs Baseline " << fixed(base) << " (Full >= Baseline)";
  return {full >= base, d.str()};
}

// 7. Morphology against exhaustive implementations.
Outcome morphology_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(707);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int mismatches = 0;
  for (int k = 0; k < 200; ++k) {
    const Dims3 dims{1 + static_cast<Index>(rng() % 12), 1 + static_cast<Index>(rng() % 12),
                     1 + static_cast<Index>(rng() % 12)};
    const BinaryMask3 m = oracle::random_mask(dims, 0.05 + 0.55 * u(rng), rng);
    const int conn = k % 2 == 0 ? 26 : 6;
    const int radius = static_cast<int>(rng() % 3);
    mismatches += !(largest_component(m, conn) == oracle::largest_component(m, conn));
    mismatches += !(slice_contours(m) == oracle::slice_contours(m));
    mismatches += !(dilate(m, radius) == oracle::dilate(m, radius));
  }
  return {mismatches == 0, "200 random masks up to 12^3: " + std::to_string(mismatches) +
                               " mismatches across largest_component (6/26), slice_contours, dilate (" +
                               fixed(seconds_since(t0), 2) + " s)"};
}

// 8. Two identical training runs through the command line.
Outcome determinism() {
  const fs::path dir = scratch_dir("determinism");
  std::ostringstream sink;
  const std::string data = (dir / "data").string();
  int code = run_cli({"phantom-gen", "--n", "10", "--dims", "32", "--seed", "8", "--out", data}, sink, sink);
  std::vector<std::string> outs;
  for (const char* run : {"run_a", "run_b"}) {
    const std::string out = (dir / run).string();
    code = std::max(code, run_cli({"train", "--data", data + "/manifest.json", "--out", out, "--epochs", "3",
                                   "--base-width", "4", "--scales", "2", "--patch", "16", "--overlap", "4",
                                   "--patches-per-case", "2", "--seed", "21"},
                                  sink, sink));
    outs.push_back(out);
  }
  if (code != 0) return {false, "a command failed with exit " + std::to_string(code) + ": " + sink.str()};
  const std::string h1 = read_text_file(outs[0] + "/history.csv"), h2 = read_text_file(outs[1] + "/history.csv");
  const std::string c1 = read_text_file(outs[0] + "/checkpoint.ckpt"), c2 = read_text_file(outs[1] + "/checkpoint.ckpt");
  const std::string m1 = read_text_file(outs[0] + "/run_metadata.json"),
                    m2 = read_text_file(outs[1] + "/run_metadata.json");
  const bool pass = h1 == h2 && c1 == c2 && m1 == m2 && !c1.empty() && h1.find('\n') + 1 < h1.size();
  fs::remove_all(dir);
  return {pass, std::string("history.csv ") + (h1 == h2 ? "identical" : "DIFFERS") + ", checkpoint (" +
                    std::to_string(c1.size()) + " bytes) " + (c1 == c2 ? "identical" : "DIFFERS") +
                    ", run metadata " + (m1 == m2 ? "identical" : "DIFFERS")};
}

// 9. Volume file fuzzing and round trips.
Outcome format_robustness() {
  std::mt19937_64 rng(909);
  auto random_volume = [&](DType t, Dims3 dims) {
    VolumeFile v;
    v.dtype = t;
    v.dims = dims;
    v.spacing = {0.5f + static_cast<float>(rng() % 100) / 50.0f, 1.0f, 0.25f + static_cast<float>(rng() % 7)};
    const auto n = static_cast<size_t>(v.numel());
    if (t == DType::kFloat32) {
      std::normal_distribution<float> nd;
      for (size_t i = 0; i < n; ++i) v.f32.push_back(nd(rng));
    } else {
      for (size_t i = 0; i < n; ++i) v.u8.push_back(static_cast<std::uint8_t>(rng() % 2));
    }
    return v;
  };

  int silent = 0, detected = 0, harmless = 0;
  for (int k = 0; k < 1000; ++k) {
    const DType t = k % 2 == 0 ? DType::kFloat32 : DType::kUInt8;
    const VolumeFile v = random_volume(t, {1 + static_cast<Index>(rng() % 6), 1 + static_cast<Index>(rng() % 6),
                                           1 + static_cast<Index>(rng() % 6)});
    const std::vector<std::uint8_t> good = encode_volume(v);
    std::vector<std::uint8_t> bad = good;
    const int flips = 1 + static_cast<int>(rng() % 4);
    for (int f = 0; f < flips; ++f) {
      const size_t at = rng() % kVolumeHeaderSize;
      if (k % 3 == 0) {
        bad[at] = static_cast<std::uint8_t>(rng());
      } else {
        bad[at] ^= static_cast<std::uint8_t>(1u << (rng() % 8));
      }
    }
    if (bad == good) {
      ++harmless;
      continue;
    }
    try {
      const VolumeFile back = decode_volume(bad, "fuzz");
      // Accepting altered bytes is only fine if nothing observable changed.
      if (encode_volume(back) != good) ++silent;
      else ++harmless;
    } catch (const FormatError&) {
      ++detected;
    }
  }

  int truncations_missed = 0;
  for (int k = 0; k < 100; ++k) {
    const VolumeFile v = random_volume(DType::kFloat32, {2, 3, 4});
    std::vector<std::uint8_t> bytes = encode_volume(v);
    bytes.resize(rng() % bytes.size());
    try {
      decode_volume(bytes, "truncated");
      ++truncations_missed;
    } catch (const FormatError&) {
    }
  }

  const fs::path dir = scratch_dir("format");
  int round_trip_fail = 0;
  for (int k = 0; k < 20; ++k) {
    const bool mask = k % 4 == 3;
    const Dims3 dims = k == 0 ? Dims3{64, 64, 64} : Dims3{1 + static_cast<Index>(rng() % 9), 2, 3};
    VolumeFile v = random_volume(mask ? DType::kUInt8 : DType::kFloat32, dims);
    if (!mask && v.f32.size() >= 4) {
      v.f32[0] = -0.0f;
      v.f32[1] = std::numeric_limits<float>::denorm_min();
      v.f32[2] = std::numeric_limits<float>::max();
      v.f32[3] = -std::numeric_limits<float>::min();
    }
    const std::string path = (dir / ("v" + std::to_string(k) + ".svol")).string();
    write_volume(path, v);
    const VolumeFile back = read_volume(path);
    const bool same = back.dtype == v.dtype && back.dims == v.dims &&
                      std::memcmp(back.spacing.data(), v.spacing.data(), sizeof(float) * 3) == 0 &&
                      back.u8 == v.u8 && back.f32.size() == v.f32.size() &&
                      std::memcmp(back.f32.data(), v.f32.data(), sizeof(float) * v.f32.size()) == 0 &&
                      encode_volume(back) == encode_volume(v);
    round_trip_fail += !same;
  }
  fs::remove_all(dir);
  const bool pass = silent == 0 && truncations_missed == 0 && round_trip_fail == 0;
  return {pass, "1000 header corruptions: " + std::to_string(detected) + " rejected, " + std::to_string(harmless) +
                    " no-ops, " + std::to_string(silent) + " silent misparses; 100 truncations: " +
                    std::to_string(truncations_missed) + " accepted; 20 round trips (incl. 64^3 f32): " +
                    std::to_string(round_trip_fail) + " not bit-exact"};
}

struct Criterion {
  int id;
  const char* title;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wavecor acceptance checks"};
  std::vector<int> selected;
  app.add_option("--criterion", selected, "criterion number (repeatable); default all")->check(CLI::Range(1, 9));
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> all{
      {1, "wavelet perfect reconstruction", wavelet_round_trip},
      {2, "finite-difference gradients", gradients},
      {3, "metrics oracle", metrics_oracle},
      {4, "toggle equivalences", toggles},
      {5, "desk-scale training", desk_training},
      {6, "ablation direction", ablation_direction},
      {7, "morphology oracle", morphology_oracle},
      {8, "determinism", determinism},
      {9, "format robustness", format_robustness},
  };
  const std::set<int> want(selected.begin(), selected.end());
  bool ok = true;
  for (const Criterion& c : all) {
    if (!want.empty() && !want.count(c.id)) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << "criterion " << c.id << " " << (o.pass ? "PASS" : "FAIL") << " " << c.title << ": " << o.detail
              << " [" << fixed(seconds_since(t0), 1) << " s]" << std::endl;
    ok = ok && o.pass;
  }
  return ok ? 0 : 1;
}
