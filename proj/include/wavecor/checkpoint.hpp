#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "wavecor/config_io.hpp"
#include "wavecor/network.hpp"

WAVECOR_BEGIN_NAMESPACE

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Layout (little-endian):
//   "CKPT" | u32 version | u32 n + n bytes of JSON header
//   u32 count | count x entry | u32 CRC-32 of every preceding byte
// entry: u8 kind (0 parameter, 1 buffer) | u32 n + name | u8 rank |
//        rank x u32 dims | numel x f32
// The JSON header holds {"network": ..., "seed": ..., "metadata": ...}.

struct LoadedModel {
  std::unique_ptr<Network> network;
  Json metadata;
};

std::vector<std::uint8_t> encode_checkpoint(const Network& net, const Json& metadata = Json::object());
LoadedModel decode_checkpoint(std::span<const std::uint8_t> bytes, const std::string& source = "checkpoint");

void save_checkpoint(const std::string& path, const Network& net, const Json& metadata = Json::object());
LoadedModel load_checkpoint(const std::string& path);

WAVECOR_END_NAMESPACE
