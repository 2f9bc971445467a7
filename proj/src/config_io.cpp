#include "wavecor/config_io.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "wavecor/errors.hpp"
#include "wavecor/layers.hpp"

WAVECOR_BEGIN_NAMESPACE

namespace {

// Strict reader over one JSON object.
class Fields {
 public:
  Fields(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j.is_object()) throw ValidationError(where_ + ": expected a JSON object");
  }
  ~Fields() = default;

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ValidationError(field(key) + ": wrong type (" + std::string(it->type_name()) + ")");
    }
  }

  void get_number(const char* key, double& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    if (!it->is_number()) throw ValidationError(field(key) + ": expected a number");
    out = it->get<double>();
  }

  template <class I>
  void get_int(const char* key, I& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    if (!it->is_number_integer()) throw ValidationError(field(key) + ": expected an integer");
    if constexpr (std::is_unsigned_v<I>) {
      if (it->is_number_unsigned()) {
        out = static_cast<I>(it->get<std::uint64_t>());
      } else {
        const auto v = it->get<std::int64_t>();
        if (v < 0) throw ValidationError(field(key) + ": must be non-negative");
        out = static_cast<I>(v);
      }
    } else {
      out = static_cast<I>(it->get<std::int64_t>());
    }
  }

  void get_dims(const char* key, std::array<Index, 3>& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    if (it->is_number_integer()) {
      out.fill(it->get<Index>());
      return;
    }
    if (!it->is_array() || it->size() != 3) throw ValidationError(field(key) + ": expected 3 integers");
    for (size_t a = 0; a < 3; ++a) {
      if (!(*it)[a].is_number_integer()) throw ValidationError(field(key) + ": expected 3 integers");
      out[a] = (*it)[a].get<Index>();
    }
  }

  void get_triple(const char* key, std::array<double, 3>& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    if (it->is_number()) {
      out.fill(it->get<double>());
      return;
    }
    if (!it->is_array() || it->size() != 3) throw ValidationError(field(key) + ": expected 3 numbers");
    for (size_t a = 0; a < 3; ++a) {
      if (!(*it)[a].is_number()) throw ValidationError(field(key) + ": expected 3 numbers");
      out[a] = (*it)[a].get<double>();
    }
  }

  const Json* child(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string field(const std::string& key) const { return where_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ValidationError(field(it.key()) + ": unknown field");
    }
  }

 private:
  const Json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

}  // namespace

Json to_json(const NetworkConfig& c) {
  return Json{{"base_width", c.base_width},   {"scales", c.scales},         {"use_mpe", c.use_mpe},
              {"use_rfe", c.use_rfe},         {"use_msff", c.use_msff},     {"use_wt_iwt", c.use_wt_iwt},
              {"scale_init", c.scale_init},   {"alpha_init", c.alpha_init}, {"in_channels", c.in_channels},
              {"out_channels", c.out_channels}, {"fused_channels", c.fused_channels}, {"wavelet", c.wavelet}};
}

Json to_json(const LossConfig& c) { return Json{{"lambda", c.lambda}, {"dice_eps", c.dice_eps}}; }

Json to_json(const OptimConfig& c) {
  return Json{{"lr", c.lr},         {"beta1", c.beta1},   {"beta2", c.beta2},
              {"eps", c.eps},       {"epochs", c.epochs}, {"patience", c.patience}};
}

Json to_json(const PatchConfig& c) { return Json{{"size", c.size}, {"overlap", c.overlap}}; }

Json to_json(const TrainConfig& c) {
  return Json{{"network", to_json(c.network)},
              {"loss", to_json(c.loss)},
              {"optim", to_json(c.optim)},
              {"patch", to_json(c.patch)},
              {"seed", c.seed},
              {"prior_radius", c.prior_radius},
              {"patches_per_case", c.patches_per_case},
              {"augment", c.augment},
              {"threads", c.threads}};
}

Json to_json(const PhantomSpec& s) {
  return Json{{"dims", s.dims},
              {"spacing", s.spacing},
              {"shell_radii", s.shell_radii},
              {"shell_thickness", s.shell_thickness},
              {"center_jitter", s.center_jitter},
              {"radius_jitter", s.radius_jitter},
              {"roots", s.roots},
              {"depth", s.depth},
              {"branch_length", s.branch_length},
              {"max_radius", s.max_radius},
              {"min_radius", s.min_radius},
              {"taper", s.taper},
              {"tortuosity", s.tortuosity},
              {"branch_angle", s.branch_angle},
              {"surface_offset", s.surface_offset},
              {"max_polar", s.max_polar},
              {"distractors", s.distractors},
              {"distractor_radius", s.distractor_radius},
              {"distractor_length", s.distractor_length},
              {"vessel_intensity", s.vessel_intensity},
              {"cavity_intensity", s.cavity_intensity},
              {"myo_intensity", s.myo_intensity},
              {"background_intensity", s.background_intensity},
              {"noise_sigma", s.noise_sigma},
              {"seed", s.seed}};
}

void from_json(const Json& j, NetworkConfig& c, const std::string& where) {
  Fields f(j, where);
  f.get_int("base_width", c.base_width);
  f.get_int("scales", c.scales);
  f.get("use_mpe", c.use_mpe);
  f.get("use_rfe", c.use_rfe);
  f.get("use_msff", c.use_msff);
  f.get("use_wt_iwt", c.use_wt_iwt);
  f.get_number("scale_init", c.scale_init);
  f.get_number("alpha_init", c.alpha_init);
  f.get_int("in_channels", c.in_channels);
  f.get_int("out_channels", c.out_channels);
  f.get_int("fused_channels", c.fused_channels);
  f.get("wavelet", c.wavelet);
  f.finish();
}

void from_json(const Json& j, LossConfig& c, const std::string& where) {
  Fields f(j, where);
  f.get_number("lambda", c.lambda);
  f.get_number("dice_eps", c.dice_eps);
  f.finish();
}

void from_json(const Json& j, OptimConfig& c, const std::string& where) {
  Fields f(j, where);
  f.get_number("lr", c.lr);
  f.get_number("beta1", c.beta1);
  f.get_number("beta2", c.beta2);
  f.get_number("eps", c.eps);
  f.get_int("epochs", c.epochs);
  f.get_int("patience", c.patience);
  f.finish();
}

void from_json(const Json& j, PatchConfig& c, const std::string& where) {
  Fields f(j, where);
  f.get_dims("size", c.size);
  f.get_int("overlap", c.overlap);
  f.finish();
}

void from_json(const Json& j, TrainConfig& c, const std::string& where) {
  Fields f(j, where);
  if (const Json* n = f.child("network")) from_json(*n, c.network, f.field("network"));
  if (const Json* n = f.child("loss")) from_json(*n, c.loss, f.field("loss"));
  if (const Json* n = f.child("optim")) from_json(*n, c.optim, f.field("optim"));
  if (const Json* n = f.child("patch")) from_json(*n, c.patch, f.field("patch"));
  f.get_int("seed", c.seed);
  f.get_int("prior_radius", c.prior_radius);
  f.get_int("patches_per_case", c.patches_per_case);
  f.get("augment", c.augment);
  f.get_int("threads", c.threads);
  f.finish();
}

void from_json(const Json& j, PhantomSpec& s, const std::string& where) {
  Fields f(j, where);
  f.get_dims("dims", s.dims);
  f.get_triple("spacing", s.spacing);
  f.get_triple("shell_radii", s.shell_radii);
  f.get_number("shell_thickness", s.shell_thickness);
  f.get_number("center_jitter", s.center_jitter);
  f.get_number("radius_jitter", s.radius_jitter);
  f.get_int("roots", s.roots);
  f.get_int("depth", s.depth);
  f.get_number("branch_length", s.branch_length);
  f.get_number("max_radius", s.max_radius);
  f.get_number("min_radius", s.min_radius);
  f.get_number("taper", s.taper);
  f.get_number("tortuosity", s.tortuosity);
  f.get_number("branch_angle", s.branch_angle);
  f.get_number("surface_offset", s.surface_offset);
  f.get_number("max_polar", s.max_polar);
  f.get_int("distractors", s.distractors);
  f.get_number("distractor_radius", s.distractor_radius);
  f.get_number("distractor_length", s.distractor_length);
  f.get_number("vessel_intensity", s.vessel_intensity);
  f.get_number("cavity_intensity", s.cavity_intensity);
  f.get_number("myo_intensity", s.myo_intensity);
  f.get_number("background_intensity", s.background_intensity);
  f.get_number("noise_sigma", s.noise_sigma);
  f.get_int("seed", s.seed);
  f.finish();
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path + ": invalid JSON (" + e.what() + ")");
  }
}

void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("error while writing '" + path + "'");
}

std::string config_hash(const Json& j) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(j.dump())));
  return buf;
}

WAVECOR_END_NAMESPACE
