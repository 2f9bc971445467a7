#include "wavecor/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

#include "wavecor/errors.hpp"
#include "wavecor/morphology.hpp"

WAVECOR_BEGIN_NAMESPACE

void PatchConfig::validate() const {
  for (Index s : size)
    if (s < 1) throw ConfigError("patch size must be positive");
  if (overlap < 0) throw ConfigError("patch overlap must be >= 0");
  for (Index s : size)
    if (overlap >= s) throw ConfigError("patch overlap must be smaller than the patch size");
}

void TrainConfig::validate() const {
  network.validate();
  loss.validate();
  optim.validate();
  patch.validate();
  network.validate_input(patch.size);
  if (prior_radius < 0) throw ConfigError("prior_radius must be >= 0");
  if (patches_per_case < 0) throw ConfigError("patches_per_case must be >= 0");
  if (threads < 0) throw ConfigError("threads must be >= 0");
}

Tensor normalize_minmax(const Tensor& volume) {
  Tensor out(volume.shape());
  if (volume.empty()) return out;
  const auto [lo, hi] = std::minmax_element(volume.values().begin(), volume.values().end());
  const double a = *lo, range = static_cast<double>(*hi) - a;
  if (range <= 0) return out;
  for (Index i = 0; i < out.numel(); ++i) out[i] = static_cast<Real>((volume[i] - a) / range);
  return out;
}

Case prepare_case(const std::string& id, const Tensor& intensity, const BinaryMask3& label,
                  const BinaryMask3& myocardium, int prior_radius) {
  require_rank(intensity, 5, "case intensity");
  const Dims3 dims{intensity.dim(2), intensity.dim(3), intensity.dim(4)};
  if (intensity.dim(0) != 1 || intensity.dim(1) != 1 || label.dims() != dims || myocardium.dims() != dims) {
    throw DimensionError("case '" + id + "': volume " + shape_string(intensity.shape()) +
                         " and masks disagree in shape");
  }
  Case c;
  c.id = id;
  c.volume = normalize_minmax(intensity);
  c.prior = mask_to_tensor(build_prior(myocardium, prior_radius));
  c.label = label;
  return c;
}

Case prepare_case(const VolumeRecord& r, int prior_radius) {
  BinaryMask3 label = r.vessel;
  label.set_spacing(r.spacing);
  return prepare_case(r.id, r.intensity, label, r.myo, prior_radius);
}

std::vector<Tensor> snapshot(const ParameterStore& store) {
  std::vector<Tensor> out;
  for (const auto& p : store.parameters()) out.push_back(p->value());
  for (const auto& [name, t] : store.buffers()) out.push_back(*t);
  return out;
}

void restore(ParameterStore& store, const std::vector<Tensor>& values) {
  const size_t np = store.parameters().size();
  if (values.size() != np + store.buffers().size()) throw UsageError("restore: snapshot size mismatch");
  for (size_t i = 0; i < np; ++i) store.parameters()[i]->value() = values[i];
  for (size_t i = 0; i < store.buffers().size(); ++i) *store.buffers()[i].second = values[np + i];
}

double train_step(Network& net, Adam& opt, const Sample& s, const LossConfig& loss, double lr) {
  net.store().zero_grad();
  Graph g;
  const Var logits = net.forward(g, s.volume, s.prior, Mode::kTrain);
  const Var l = total_loss(g, logits, mask_to_tensor(s.label), loss);
  const double value = l.value()[0];
  if (!std::isfinite(value)) {
    const auto where = g.first_non_finite();
    throw TrainingError("non-finite training loss; first non-finite value produced by " +
                        where.value_or(std::string("<unknown op>")));
  }
  g.backward(l);
  opt.step(lr);
  return value;
}

Tensor predict_logits(const Network& net, const Tensor& volume, const Tensor& prior, const PatchConfig& patch) {
  require_rank(volume, 5, "predict input");
  const Dims3 dims{volume.dim(2), volume.dim(3), volume.dim(4)};
  const PatchGrid grid = plan_patches(dims, patch.size, patch.overlap);
  std::vector<Tensor> outs;
  outs.reserve(static_cast<size_t>(grid.cells()));
  const bool use_prior = net.config().use_mpe;
  for (Index c = 0; c < grid.cells(); ++c) {
    const Dims3 o = grid.origin(c);
    Graph g(false);
    const Tensor pv = extract_patch(volume, o, patch.size);
    const Tensor pp = use_prior ? extract_patch(prior, o, patch.size) : Tensor();
    outs.push_back(net.forward(g, pv, pp, Mode::kEval).value());
  }
  return stitch(outs, grid);
}

BinaryMask3 predict_mask(const Network& net, const Case& c, const PatchConfig& patch) {
  return threshold_logits(predict_logits(net, c.volume, c.prior, patch), c.label.spacing());
}

SegMetrics evaluate_case(const Network& net, const Case& c, const PatchConfig& patch) {
  return compute_metrics(predict_mask(net, c, patch), c.label);
}

std::vector<SegMetrics> evaluate_cases(const Network& net, const std::vector<Case>& cases,
                                       const PatchConfig& patch, int threads) {
  std::vector<SegMetrics> out(cases.size());
  unsigned n = threads > 0 ? static_cast<unsigned>(threads) : std::max(1u, std::thread::hardware_concurrency());
  n = std::min<unsigned>(n, static_cast<unsigned>(std::max<size_t>(cases.size(), 1)));
  if (n <= 1) {
    for (size_t i = 0; i < cases.size(); ++i) out[i] = evaluate_case(net, cases[i], patch);
    return out;
  }
  // Each worker takes a fixed stride of cases; results land at their index.
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < n; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (size_t i = t; i < cases.size(); i += n) out[i] = evaluate_case(net, cases[i], patch);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

namespace {

struct PatchRef {
  size_t case_index;
  Dims3 origin;
};

std::vector<PatchRef> epoch_patches(const std::vector<Case>& cases, const TrainConfig& cfg, std::mt19937_64& rng) {
  std::vector<PatchRef> refs;
  for (size_t i = 0; i < cases.size(); ++i) {
    const Dims3& dims = cases[i].label.dims();
    if (cfg.patches_per_case == 0) {
      const PatchGrid grid = plan_patches(dims, cfg.patch.size, cfg.patch.overlap);
      for (Index c = 0; c < grid.cells(); ++c) refs.push_back({i, grid.origin(c)});
      continue;
    }
    for (int k = 0; k < cfg.patches_per_case; ++k) {
      Dims3 o{};
      for (size_t a = 0; a < 3; ++a) {
        o[a] = std::uniform_int_distribution<Index>(0, dims[a] - cfg.patch.size[a])(rng);
      }
      refs.push_back({i, o});
    }
  }
  std::shuffle(refs.begin(), refs.end(), rng);
  return refs;
}

}  // namespace

TrainResult train(Network& net, const std::vector<Case>& train_cases, const std::vector<Case>& val_cases,
                  const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  if (train_cases.empty()) throw ConfigError("training set is empty");
  if (val_cases.empty()) throw ConfigError("validation set is empty");
  for (const auto* set : {&train_cases, &val_cases})
    for (const Case& c : *set) {
      net.config().validate_input(c.label.dims());
      for (size_t a = 0; a < 3; ++a) {
        if (cfg.patch.size[a] > c.label.dims()[a]) {
          throw ConfigError("case '" + c.id + "': patch larger than the volume");
        }
      }
    }

  std::vector<Parameter*> params;
  for (const auto& p : net.store().parameters()) params.push_back(p.get());
  Adam opt(params, cfg.optim);
  std::mt19937_64 rng(mix64(cfg.seed ^ 0x747261696eULL));
  EarlyStopping stopper(cfg.optim.patience);
  std::vector<Tensor> best = snapshot(net.store());
  TrainResult result;

  for (int epoch = 0; epoch < cfg.optim.epochs; ++epoch) {
    const double lr = cosine_lr(epoch, cfg.optim.epochs, cfg.optim.lr);
    double loss_sum = 0.0;
    const auto refs = epoch_patches(train_cases, cfg, rng);
    for (const PatchRef& ref : refs) {
      const Case& c = train_cases[ref.case_index];
      Sample s;
      s.volume = extract_patch(c.volume, ref.origin, cfg.patch.size);
      if (net.config().use_mpe) s.prior = extract_patch(c.prior, ref.origin, cfg.patch.size);
      s.label = extract_patch(c.label, ref.origin, cfg.patch.size);
      if (cfg.augment) random_flip(s, rng);
      loss_sum += train_step(net, opt, s, cfg.loss, lr);
      ++result.steps;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr;
    rec.train_loss = loss_sum / static_cast<double>(refs.size());
    rec.val_dsc = summarize(evaluate_cases(net, val_cases, cfg.patch, cfg.threads)).dsc;
    result.history.push_back(rec);
    const bool stop = stopper.update(epoch, rec.val_dsc);
    if (stopper.improved()) best = snapshot(net.store());
    if (on_epoch) on_epoch(rec);
    if (stop) {
      result.stopped_early = true;
      break;
    }
  }
  restore(net.store(), best);
  result.best_epoch = stopper.best_epoch();
  result.best_val_dsc = stopper.best_score();
  return result;
}

std::vector<AblationRow> ablate(const std::vector<Case>& train_cases, const std::vector<Case>& val_cases,
                                const std::vector<Case>& test_cases, const TrainConfig& base,
                                const AblationCallback& on_epoch) {
  std::vector<AblationRow> rows;
  for (const std::string& name : variant_names()) {
    TrainConfig cfg = base;
    cfg.network = make_variant(name, base.network);
    Network net(cfg.network, cfg.seed);
    AblationRow row;
    row.model = name;
    row.config = cfg.network;
    row.parameters = net.parameter_count();
    row.training = train(net, train_cases, val_cases, cfg,
                         [&](const EpochRecord& r) { if (on_epoch) on_epoch(name, r); });
    row.test = summarize(evaluate_cases(net, test_cases, cfg.patch, cfg.threads));
    rows.push_back(std::move(row));
  }
  return rows;
}

WAVECOR_END_NAMESPACE
