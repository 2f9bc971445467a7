#pragma once

#include <json.hpp>

#include "wavecor/phantom.hpp"
#include "wavecor/trainer.hpp"

WAVECOR_BEGIN_NAMESPACE

using Json = nlohmann::ordered_json;

// Readers accept partial objects: absent keys keep the value already in
// `out`. Unknown keys and wrong types raise ValidationError naming the field.

Json to_json(const NetworkConfig& c);
Json to_json(const LossConfig& c);
Json to_json(const OptimConfig& c);
Json to_json(const PatchConfig& c);
Json to_json(const TrainConfig& c);
Json to_json(const PhantomSpec& s);

void from_json(const Json& j, NetworkConfig& out, const std::string& where = "network");
void from_json(const Json& j, LossConfig& out, const std::string& where = "loss");
void from_json(const Json& j, OptimConfig& out, const std::string& where = "optim");
void from_json(const Json& j, PatchConfig& out, const std::string& where = "patch");
void from_json(const Json& j, TrainConfig& out, const std::string& where = "config");
void from_json(const Json& j, PhantomSpec& out, const std::string& where = "phantom");

Json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const Json& j);

/// FNV-1a over the compact serialization, as 16 hex digits.
std::string config_hash(const Json& j);

WAVECOR_END_NAMESPACE
