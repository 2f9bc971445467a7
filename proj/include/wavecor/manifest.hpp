#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wavecor/config_io.hpp"
#include "wavecor/phantom.hpp"
#include "wavecor/trainer.hpp"

WAVECOR_BEGIN_NAMESPACE

struct ManifestEntry {
  std::string id;
  std::string volume;  // paths relative to the manifest directory
  std::string vessel;
  std::string myo;
  std::string split;
  std::uint64_t seed = 0;
};

struct Manifest {
  std::vector<ManifestEntry> cases;
  /// Generator settings, kept verbatim; null when absent.
  Json generator;
  /// Directory the relative paths resolve against.
  std::string base_dir;

  std::string resolve(const std::string& relative) const;
  std::vector<const ManifestEntry*> subset(const std::string& split) const;
};

/// Rejects unknown fields, unknown splits, duplicate ids and missing files.
Manifest load_manifest(const std::string& path);
Manifest parse_manifest(const Json& j, const std::string& base_dir, bool check_files = true);
Json manifest_to_json(const Manifest& m);
void save_manifest(const std::string& path, const Manifest& m);

/// Writes every record as three volume files plus manifest.json under `dir`.
Manifest write_dataset(const std::string& dir, const Dataset& ds, const PhantomSpec& spec);

Case load_case(const Manifest& m, const ManifestEntry& e, int prior_radius);
std::vector<Case> load_cases(const Manifest& m, const std::string& split, int prior_radius);

WAVECOR_END_NAMESPACE
