#include "wavecor/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <ostream>
#include <random>

#include "wavecor/checkpoint.hpp"
#include "wavecor/config_io.hpp"
#include "wavecor/errors.hpp"
#include "wavecor/manifest.hpp"
#include "wavecor/morphology.hpp"
#include "wavecor/report.hpp"
#include "wavecor/volume_io.hpp"
#include "wavecor/wavelet.hpp"

WAVECOR_BEGIN_NAMESPACE

namespace fs = std::filesystem;

int threads_from_env(int fallback) {
  const char* v = std::getenv("WAVECOR_THREADS");
  if (!v || !*v) return fallback;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n < 0 || n > 4096) {
    throw ConfigError(std::string("WAVECOR_THREADS must be a non-negative integer, got '") + v + "'");
  }
  return static_cast<int>(n);
}

namespace {

Json run_metadata(const std::string& command, std::uint64_t seed, const Json& config) {
  return Json{{"command", command},
              {"seed", seed},
              {"config_hash", config_hash(config)},
              {"version", kVersion},
              {"precision", sizeof(Real) == 4 ? "f32" : "f64"},
              {"config", config}};
}

void print_resolved(std::ostream& out, const std::string& command, std::uint64_t seed, const Json& config) {
  out << "command: " << command << "\n"
      << "seed: " << seed << "\n"
      << "config: " << config.dump() << "\n";
}

void make_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir + "': " + ec.message());
}

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

Dims3 dims_from(const std::vector<Index>& v, const char* flag) {
  if (v.size() == 1) return {v[0], v[0], v[0]};
  if (v.size() == 3) return {v[0], v[1], v[2]};
  throw ConfigError(std::string(flag) + " takes 1 or 3 integers");
}

std::string fmt(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// Flags shared by train and ablate; each one overrides the config file.
struct TrainFlags {
  std::string config;
  std::string variant;
  int epochs = 0, patience = 0, patches_per_case = 0, threads = 0, scales = 0, prior_radius = 0;
  double lr = 0.0, lambda = 0.0;
  Index base_width = 0, overlap = 0;
  std::uint64_t seed = 0;
  std::vector<Index> patch;
  bool no_augment = false;
  std::map<std::string, CLI::Option*> opts;

  void add_to(CLI::App* app) {
    opts["config"] = app->add_option("--config", config, "training config JSON")->check(CLI::ExistingFile);
    opts["variant"] = app->add_option("--variant", variant, "Baseline, E1, E2, E3, E4 or Full");
    opts["epochs"] = app->add_option("--epochs", epochs);
    opts["patience"] = app->add_option("--patience", patience);
    opts["lr"] = app->add_option("--lr", lr);
    opts["lambda"] = app->add_option("--lambda", lambda, "dice weight of the loss");
    opts["seed"] = app->add_option("--seed", seed);
    opts["patches_per_case"] = app->add_option("--patches-per-case", patches_per_case);
    opts["threads"] = app->add_option("--threads", threads);
    opts["base_width"] = app->add_option("--base-width", base_width);
    opts["scales"] = app->add_option("--scales", scales);
    opts["prior_radius"] = app->add_option("--prior-radius", prior_radius);
    opts["patch"] = app->add_option("--patch", patch, "patch size (1 or 3 integers)")->expected(1, 3);
    opts["overlap"] = app->add_option("--overlap", overlap);
    opts["no_augment"] = app->add_flag("--no-augment", no_augment);
  }

  bool given(const char* key) const { return opts.at(key)->count() > 0; }

  TrainConfig resolve() const {
    TrainConfig cfg;
    cfg.threads = threads_from_env(cfg.threads);
    if (!config.empty()) from_json(read_json_file(config), cfg);
    if (given("variant")) {
      const auto& names = variant_names();
      if (std::find(names.begin(), names.end(), variant) == names.end()) {
        throw ConfigError("--variant: unknown variant '" + variant + "'");
      }
      cfg.network = make_variant(variant, cfg.network);
    }
    if (given("epochs")) cfg.optim.epochs = epochs;
    if (given("patience")) cfg.optim.patience = patience;
    if (given("lr")) cfg.optim.lr = lr;
    if (given("lambda")) cfg.loss.lambda = lambda;
    if (given("seed")) cfg.seed = seed;
    if (given("patches_per_case")) cfg.patches_per_case = patches_per_case;
    if (given("threads")) cfg.threads = threads;
    if (given("base_width")) cfg.network.base_width = base_width;
    if (given("scales")) cfg.network.scales = scales;
    if (given("prior_radius")) cfg.prior_radius = prior_radius;
    if (given("patch")) cfg.patch.size = dims_from(patch, "--patch");
    if (given("overlap")) cfg.patch.overlap = overlap;
    if (no_augment) cfg.augment = false;
    cfg.validate();
    return cfg;
  }
};

void check_cases(const std::vector<Case>& cases, const TrainConfig& cfg, const char* split) {
  if (cases.empty()) throw ConfigError(std::string("manifest has no ") + split + " cases");
  for (const Case& c : cases) {
    cfg.network.validate_input(c.label.dims());
    for (size_t a = 0; a < 3; ++a) {
      if (cfg.patch.size[a] > c.label.dims()[a]) {
        throw ConfigError("case '" + c.id + "': patch size exceeds the volume along axis " + std::to_string(a));
      }
    }
  }
}

Json epoch_json(const EpochRecord& r) {
  return Json{{"epoch", r.epoch}, {"lr", r.lr}, {"train_loss", r.train_loss}, {"val_dsc", r.val_dsc}};
}

void print_epoch(std::ostream& out, const std::string& prefix, const EpochRecord& r) {
  out << prefix << "epoch " << r.epoch << " lr " << fmt(r.lr, 6) << " loss " << fmt(r.train_loss, 5) << " val_dsc "
      << fmt(r.val_dsc, 4) << std::endl;
}

Json metrics_json(const SegMetrics& m) {
  return Json{{"DSC", m.dsc},
              {"Sensitivity", m.sensitivity},
              {"Precision", m.precision},
              {"HD95_mm", m.hd95_mm ? Json(*m.hd95_mm) : Json()},
              {"tp", m.tp},
              {"fp", m.fp},
              {"fn", m.fn}};
}

int cmd_phantom_gen(Index n, const std::vector<Index>& dims, bool dims_given, std::uint64_t seed,
                    const std::string& config, const std::string& out_dir, std::ostream& out) {
  PhantomSpec spec;
  if (!config.empty()) from_json(read_json_file(config), spec);
  if (dims_given) spec = resize_spec(spec, dims_from(dims, "--dims"));
  if (n < 10) throw ConfigError("--n must be at least 10, got " + std::to_string(n));
  spec.validate();
  const Json resolved{{"n", n}, {"base_seed", seed}, {"phantom", to_json(spec)}};
  print_resolved(out, "phantom-gen", seed, resolved);

  const Dataset ds = make_dataset(n, spec, seed);
  const Manifest m = write_dataset(out_dir, ds, spec);
  write_json_file(join(out_dir, "run_metadata.json"), run_metadata("phantom-gen", seed, resolved));
  out << "wrote " << m.cases.size() << " cases (train " << m.subset("train").size() << ", val "
      << m.subset("val").size() << ", test " << m.subset("test").size() << ") to " << out_dir << "\n";
  return kExitOk;
}

int cmd_train(const std::string& data, const std::string& out_dir, const TrainFlags& flags, std::ostream& out) {
  const TrainConfig cfg = flags.resolve();
  const Json resolved = to_json(cfg);
  print_resolved(out, "train", cfg.seed, resolved);

  const Manifest m = load_manifest(data);
  const auto train_cases = load_cases(m, "train", cfg.prior_radius);
  const auto val_cases = load_cases(m, "val", cfg.prior_radius);
  check_cases(train_cases, cfg, "train");
  check_cases(val_cases, cfg, "val");
  make_dir(out_dir);

  Network net(cfg.network, cfg.seed);
  const std::string variant = cfg.network.variant();
  out << "variant: " << variant << " (" << net.parameter_count() << " parameters)\n";
  const TrainResult result =
      train(net, train_cases, val_cases, cfg, [&](const EpochRecord& r) { print_epoch(out, "", r); });

  Json history = Json::array();
  for (const auto& r : result.history) history.push_back(epoch_json(r));
  const Json summary{{"variant", variant},
                     {"parameters", net.parameter_count()},
                     {"best_epoch", result.best_epoch},
                     {"best_val_dsc", result.best_val_dsc},
                     {"stopped_early", result.stopped_early},
                     {"steps", result.steps},
                     {"history", history}};
  const Json ckpt_meta{{"variant", variant},
                       {"prior_radius", cfg.prior_radius},
                       {"patch", to_json(cfg.patch)},
                       {"best_epoch", result.best_epoch},
                       {"best_val_dsc", result.best_val_dsc}};
  save_checkpoint(join(out_dir, "checkpoint.ckpt"), net, ckpt_meta);
  write_text_file(join(out_dir, "history.csv"), history_csv(result.history));
  write_json_file(join(out_dir, "history.json"), summary);
  write_json_file(join(out_dir, "run_metadata.json"), run_metadata("train", cfg.seed, resolved));
  out << "best epoch " << result.best_epoch << " val_dsc " << fmt(result.best_val_dsc, 4) << "\n";
  return kExitOk;
}

int cmd_predict(const std::string& checkpoint, const std::string& volume, const std::string& prior_path,
                const std::string& out_path, const std::vector<Index>& patch, Index overlap, bool overlap_given,
                std::ostream& out) {
  LoadedModel model = load_checkpoint(checkpoint);
  const Network& net = *model.network;
  PatchConfig pc;
  if (model.metadata.contains("patch")) from_json(model.metadata.at("patch"), pc, "checkpoint.patch");
  if (!patch.empty()) pc.size = dims_from(patch, "--patch");
  if (overlap_given) pc.overlap = overlap;
  pc.validate();
  net.config().validate_input(pc.size);
  const int radius = model.metadata.value("prior_radius", 2);
  const Json resolved{{"network", to_json(net.config())}, {"patch", to_json(pc)}, {"prior_radius", radius}};
  print_resolved(out, "predict", net.seed(), resolved);

  Spacing spacing{};
  const Tensor raw = read_intensity(volume, &spacing);
  const Dims3 dims{raw.dim(2), raw.dim(3), raw.dim(4)};
  Tensor prior;
  if (net.config().use_mpe) {
    if (prior_path.empty()) throw UsageError("this model uses the myocardium prior; pass --prior <myocardium mask>");
    const BinaryMask3 myo = read_mask(prior_path);
    if (myo.dims() != dims) {
      throw DimensionError("--prior dims do not match the volume dims");
    }
    prior = mask_to_tensor(build_prior(myo, radius));
  }
  for (size_t a = 0; a < 3; ++a) {
    if (pc.size[a] > dims[a]) throw ConfigError("patch size exceeds the volume along axis " + std::to_string(a));
  }
  const BinaryMask3 mask = threshold_logits(predict_logits(net, normalize_minmax(raw), prior, pc), spacing);
  write_mask(out_path, mask);
  write_json_file(out_path + ".meta.json", run_metadata("predict", net.seed(), resolved));
  out << "wrote mask " << dims[0] << "x" << dims[1] << "x" << dims[2] << " with " << mask.count()
      << " foreground voxels to " << out_path << "\n";
  return kExitOk;
}

int cmd_eval(const std::string& pred_path, const std::string& truth_path, const std::string& out_path,
             std::ostream& out) {
  const BinaryMask3 pred = read_mask(pred_path);
  const BinaryMask3 truth = read_mask(truth_path);
  if (pred.dims() != truth.dims()) throw DimensionError("--pred and --truth dims differ");
  const Json j = metrics_json(compute_metrics(pred, truth));
  out << j.dump(2) << "\n";
  if (!out_path.empty()) write_json_file(out_path, j);
  return kExitOk;
}

int cmd_ablate(const std::string& data, const std::string& out_dir, const TrainFlags& flags, std::ostream& out) {
  const TrainConfig cfg = flags.resolve();
  const Json resolved = to_json(cfg);
  print_resolved(out, "ablate", cfg.seed, resolved);

  const Manifest m = load_manifest(data);
  const auto train_cases = load_cases(m, "train", cfg.prior_radius);
  const auto val_cases = load_cases(m, "val", cfg.prior_radius);
  const auto test_cases = load_cases(m, "test", cfg.prior_radius);
  check_cases(train_cases, cfg, "train");
  check_cases(val_cases, cfg, "val");
  check_cases(test_cases, cfg, "test");
  make_dir(out_dir);

  const auto rows = ablate(train_cases, val_cases, test_cases, cfg, [&](const std::string& model, const EpochRecord& r) {
    print_epoch(out, model + " ", r);
  });
  std::vector<ReportRow> report;
  for (const auto& r : rows) {
    report.push_back(report_row(r.model, r.test));
    write_text_file(join(out_dir, "history_" + r.model + ".csv"), history_csv(r.training.history));
  }
  write_text_file(join(out_dir, "ablation.csv"), ablation_csv(rows));
  save_report_csv(join(out_dir, "report.csv"), report);
  save_report_json(join(out_dir, "report.json"), report);
  write_json_file(join(out_dir, "run_metadata.json"), run_metadata("ablate", cfg.seed, resolved));
  out << ablation_csv(rows);
  return kExitOk;
}

int cmd_wavelet_check(const std::vector<Index>& dims_in, std::uint64_t seed, Index batch, Index channels,
                      std::ostream& out) {
  const Dims3 dims = dims_from(dims_in, "--dims");
  if (batch < 1 || channels < 1) throw ConfigError("--batch and --channels must be positive");
  for (size_t a = 0; a < 3; ++a) {
    if (dims[a] < 2 || dims[a] % 2 != 0) {
      throw ConfigError("--dims must be even and at least 2, got " + std::to_string(dims[a]) + " on axis " +
                        std::to_string(a));
    }
  }
  const Json resolved{{"dims", dims}, {"batch", batch}, {"channels", channels}, {"wavelet", "haar"}};
  print_resolved(out, "wavelet-check", seed, resolved);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Tensor x({batch, channels, dims[0], dims[1], dims[2]});
  for (Index i = 0; i < x.numel(); ++i) x[i] = static_cast<Real>(normal(rng));
  const Tensor s = dwt3(x);
  const Tensor y = iwt3(s);
  double max_err = 0.0, ex = 0.0, es = 0.0;
  for (Index i = 0; i < x.numel(); ++i) {
    max_err = std::max(max_err, std::abs(static_cast<double>(y[i]) - x[i]));
    ex += static_cast<double>(x[i]) * x[i];
  }
  for (Index i = 0; i < s.numel(); ++i) es += static_cast<double>(s[i]) * s[i];
  const double energy = std::abs(es - ex) / ex;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3e", max_err);
  out << "max_abs_error " << buf;
  std::snprintf(buf, sizeof buf, "%.3e", energy);
  out << " energy_rel_error " << buf << "\n";
  return (max_err <= 1e-5 && energy <= 1e-5) ? kExitOk : kExitFailure;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Coronary segmentation toolkit: phantoms, training, inference and evaluation"};
  app.name("wavecor");
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  // phantom-gen
  auto* gen = app.add_subcommand("phantom-gen", "generate a seeded phantom dataset and manifest");
  Index gen_n = 0;
  std::vector<Index> gen_dims;
  std::uint64_t gen_seed = 0;
  std::string gen_config, gen_out;
  gen->add_option("--n", gen_n, "number of cases (>= 10)")->required();
  auto* gen_dims_opt = gen->add_option("--dims", gen_dims, "volume dims (1 or 3 integers, multiples of 16)")
                           ->expected(1, 3);
  gen->add_option("--seed", gen_seed, "base seed");
  gen->add_option("--config", gen_config, "phantom spec JSON")->check(CLI::ExistingFile);
  gen->add_option("--out", gen_out, "output directory")->required();

  // train
  auto* tr = app.add_subcommand("train", "train one model on a manifest");
  std::string tr_data, tr_out;
  TrainFlags tr_flags;
  tr->add_option("--data", tr_data, "dataset manifest")->required()->check(CLI::ExistingFile);
  tr->add_option("--out", tr_out, "output directory")->required();
  tr_flags.add_to(tr);

  // predict
  auto* pr = app.add_subcommand("predict", "sliding-window inference on one volume");
  std::string pr_ckpt, pr_volume, pr_prior, pr_out;
  std::vector<Index> pr_patch;
  Index pr_overlap = 0;
  pr->add_option("--checkpoint", pr_ckpt)->required()->check(CLI::ExistingFile);
  pr->add_option("--volume", pr_volume, "f32 intensity volume")->required()->check(CLI::ExistingFile);
  pr->add_option("--prior", pr_prior, "u8 myocardium mask")->check(CLI::ExistingFile);
  pr->add_option("--out", pr_out, "output u8 mask path")->required();
  pr->add_option("--patch", pr_patch)->expected(1, 3);
  auto* pr_overlap_opt = pr->add_option("--overlap", pr_overlap);

  // eval
  auto* ev = app.add_subcommand("eval", "compare a predicted mask with the ground truth");
  std::string ev_pred, ev_truth, ev_out;
  ev->add_option("--pred", ev_pred)->required()->check(CLI::ExistingFile);
  ev->add_option("--truth", ev_truth)->required()->check(CLI::ExistingFile);
  ev->add_option("--out", ev_out, "optional metrics JSON path");

  // ablate
  auto* ab = app.add_subcommand("ablate", "train and test the six toggle variants");
  std::string ab_data, ab_out;
  TrainFlags ab_flags;
  ab->add_option("--data", ab_data, "dataset manifest")->required()->check(CLI::ExistingFile);
  ab->add_option("--out", ab_out, "output directory")->required();
  ab_flags.add_to(ab);

  // wavelet-check
  auto* wc = app.add_subcommand("wavelet-check", "round-trip the 3D wavelet transform on random data");
  std::vector<Index> wc_dims{16};
  std::uint64_t wc_seed = 0;
  Index wc_batch = 2, wc_channels = 3;
  wc->add_option("--dims", wc_dims, "volume dims (1 or 3 integers)")->expected(1, 3);
  wc->add_option("--seed", wc_seed);
  wc->add_option("--batch", wc_batch);
  wc->add_option("--channels", wc_channels);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) return cmd_phantom_gen(gen_n, gen_dims, gen_dims_opt->count() > 0, gen_seed, gen_config, gen_out, out);
    if (*tr) return cmd_train(tr_data, tr_out, tr_flags, out);
    if (*pr) {
      return cmd_predict(pr_ckpt, pr_volume, pr_prior, pr_out, pr_patch, pr_overlap, pr_overlap_opt->count() > 0,
                         out);
    }
    if (*ev) return cmd_eval(ev_pred, ev_truth, ev_out, out);
    if (*ab) return cmd_ablate(ab_data, ab_out, ab_flags, out);
    if (*wc) return cmd_wavelet_check(wc_dims, wc_seed, wc_batch, wc_channels, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DimensionError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

WAVECOR_END_NAMESPACE
