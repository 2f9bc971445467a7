#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "wavecor/mask.hpp"
#include "wavecor/tensor.hpp"

WAVECOR_BEGIN_NAMESPACE

// SVOL layout (all little-endian):
//   0  magic "SVOL"
//   4  u16 version (1)
//   6  u16 dtype (1 = f32, 2 = u8)
//   8  u32 D, u32 H, u32 W
//  20  f32 spacing D, H, W (mm)
//  32  u32 CRC-32 of bytes 0..31
//  36  payload, D*H*W elements, W fastest
//   .  u32 CRC-32 of the payload

enum class DType : std::uint16_t { kFloat32 = 1, kUInt8 = 2 };

inline constexpr std::uint16_t kVolumeVersion = 1;
inline constexpr size_t kVolumeHeaderSize = 36;

struct VolumeFile {
  DType dtype = DType::kFloat32;
  Dims3 dims{0, 0, 0};
  std::array<float, 3> spacing{1.0f, 1.0f, 1.0f};
  std::vector<float> f32;         // used when dtype == kFloat32
  std::vector<std::uint8_t> u8;   // used when dtype == kUInt8, values 0/1

  Index numel() const { return dims[0] * dims[1] * dims[2]; }
  bool operator==(const VolumeFile&) const = default;
};

/// Throws ValidationError on non-finite floats, non-binary u8 data or a
/// payload that does not match the dimensions.
std::vector<std::uint8_t> encode_volume(const VolumeFile& v);
/// Throws FormatError with the byte offset of the first problem.
VolumeFile decode_volume(std::span<const std::uint8_t> bytes, const std::string& source = "volume");

void write_volume(const std::string& path, const VolumeFile& v);
VolumeFile read_volume(const std::string& path);

/// Intensity volumes are (1, 1, D, H, W) tensors stored as f32.
void write_intensity(const std::string& path, const Tensor& volume, const Spacing& spacing);
Tensor read_intensity(const std::string& path, Spacing* spacing = nullptr);

void write_mask(const std::string& path, const BinaryMask3& mask);
/// Requires a u8 file.
BinaryMask3 read_mask(const std::string& path);

WAVECOR_END_NAMESPACE
