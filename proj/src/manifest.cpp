#include "wavecor/manifest.hpp"

#include <filesystem>
#include <set>

#include "wavecor/errors.hpp"
#include "wavecor/volume_io.hpp"

WAVECOR_BEGIN_NAMESPACE

namespace fs = std::filesystem;

namespace {

constexpr const char* kFormat = "wavecor-manifest";
constexpr int kManifestVersion = 1;

std::string string_field(const Json& j, const std::string& where, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw ValidationError(where + "." + key + ": missing");
  if (!it->is_string() || it->get<std::string>().empty()) {
    throw ValidationError(where + "." + key + ": expected a non-empty string");
  }
  return it->get<std::string>();
}

}  // namespace

std::string Manifest::resolve(const std::string& relative) const {
  const fs::path p(relative);
  return p.is_absolute() ? p.string() : (fs::path(base_dir) / p).lexically_normal().string();
}

std::vector<const ManifestEntry*> Manifest::subset(const std::string& split) const {
  std::vector<const ManifestEntry*> out;
  for (const auto& e : cases)
    if (e.split == split) out.push_back(&e);
  return out;
}

Manifest parse_manifest(const Json& j, const std::string& base_dir, bool check_files) {
  if (!j.is_object()) throw ValidationError("manifest: expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    if (k != "format" && k != "version" && k != "cases" && k != "generator") {
      throw ValidationError("manifest." + k + ": unknown field");
    }
  }
  if (string_field(j, "manifest", "format") != kFormat) {
    throw ValidationError(std::string("manifest.format: expected \"") + kFormat + "\"");
  }
  if (!j.contains("version") || !j.at("version").is_number_integer() || j.at("version").get<int>() != kManifestVersion) {
    throw ValidationError("manifest.version: expected " + std::to_string(kManifestVersion));
  }
  if (!j.contains("cases") || !j.at("cases").is_array()) throw ValidationError("manifest.cases: expected an array");

  Manifest m;
  m.base_dir = base_dir;
  m.generator = j.value("generator", Json());
  std::set<std::string> ids;
  const Json& cases = j.at("cases");
  for (size_t i = 0; i < cases.size(); ++i) {
    const std::string where = "manifest.cases[" + std::to_string(i) + "]";
    const Json& c = cases[i];
    if (!c.is_object()) throw ValidationError(where + ": expected an object");
    for (auto it = c.begin(); it != c.end(); ++it) {
      static const std::set<std::string> known{"id", "volume", "vessel", "myo", "split", "seed"};
      if (!known.count(it.key())) throw ValidationError(where + "." + it.key() + ": unknown field");
    }
    ManifestEntry e;
    e.id = string_field(c, where, "id");
    e.volume = string_field(c, where, "volume");
    e.vessel = string_field(c, where, "vessel");
    e.myo = string_field(c, where, "myo");
    e.split = string_field(c, where, "split");
    if (e.split != "train" && e.split != "val" && e.split != "test") {
      throw ValidationError(where + ".split: unknown split '" + e.split + "' (expected train, val or test)");
    }
    if (c.contains("seed")) {
      if (!c.at("seed").is_number_unsigned()) throw ValidationError(where + ".seed: expected an unsigned integer");
      e.seed = c.at("seed").get<std::uint64_t>();
    }
    if (!ids.insert(e.id).second) throw ValidationError(where + ".id: duplicate id '" + e.id + "'");
    if (check_files) {
      for (const auto& [key, rel] : {std::pair{"volume", &e.volume}, {"vessel", &e.vessel}, {"myo", &e.myo}}) {
        if (!fs::is_regular_file(m.resolve(*rel))) {
          throw ValidationError(where + "." + key + ": file '" + m.resolve(*rel) + "' does not exist");
        }
      }
    }
    m.cases.push_back(std::move(e));
  }
  return m;
}

Manifest load_manifest(const std::string& path) {
  const Json j = read_json_file(path);
  return parse_manifest(j, fs::path(path).parent_path().string());
}

Json manifest_to_json(const Manifest& m) {
  Json cases = Json::array();
  for (const auto& e : m.cases) {
    cases.push_back(Json{{"id", e.id},
                         {"volume", e.volume},
                         {"vessel", e.vessel},
                         {"myo", e.myo},
                         {"split", e.split},
                         {"seed", e.seed}});
  }
  Json j{{"format", kFormat}, {"version", kManifestVersion}};
  if (!m.generator.is_null()) j["generator"] = m.generator;
  j["cases"] = std::move(cases);
  return j;
}

void save_manifest(const std::string& path, const Manifest& m) { write_json_file(path, manifest_to_json(m)); }

Manifest write_dataset(const std::string& dir, const Dataset& ds, const PhantomSpec& spec) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir + "': " + ec.message());
  Manifest m;
  m.base_dir = dir;
  m.generator = Json{{"phantom", to_json(spec)}, {"base_seed", ds.base_seed}, {"n", ds.records.size()}};
  for (size_t i = 0; i < ds.records.size(); ++i) {
    const VolumeRecord& r = ds.records[i];
    ManifestEntry e{r.id, r.id + "_image.svol", r.id + "_vessel.svol", r.id + "_myo.svol", ds.split[i], r.seed};
    write_intensity(m.resolve(e.volume), r.intensity, r.spacing);
    BinaryMask3 vessel = r.vessel, myo = r.myo;
    vessel.set_spacing(r.spacing);
    myo.set_spacing(r.spacing);
    write_mask(m.resolve(e.vessel), vessel);
    write_mask(m.resolve(e.myo), myo);
    m.cases.push_back(std::move(e));
  }
  save_manifest((fs::path(dir) / "manifest.json").string(), m);
  return m;
}

Case load_case(const Manifest& m, const ManifestEntry& e, int prior_radius) {
  Spacing spacing{};
  const Tensor intensity = read_intensity(m.resolve(e.volume), &spacing);
  BinaryMask3 label = read_mask(m.resolve(e.vessel));
  const BinaryMask3 myo = read_mask(m.resolve(e.myo));
  label.set_spacing(spacing);
  return prepare_case(e.id, intensity, label, myo, prior_radius);
}

std::vector<Case> load_cases(const Manifest& m, const std::string& split, int prior_radius) {
  std::vector<Case> out;
  for (const ManifestEntry* e : m.subset(split)) out.push_back(load_case(m, *e, prior_radius));
  return out;
}

WAVECOR_END_NAMESPACE
