#include "wavecor/volume_io.hpp"

#include <zlib.h>

#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>

#include "byte_io.hpp"
#include "wavecor/errors.hpp"

WAVECOR_BEGIN_NAMESPACE

namespace detail {

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("error while reading '" + path + "'");
  return bytes;
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("error while writing '" + path + "'");
}

std::uint32_t crc32_of(const std::uint8_t* data, size_t n) {
  uLong c = crc32(0L, Z_NULL, 0);
  while (n > 0) {
    const auto chunk = static_cast<uInt>(std::min<size_t>(n, std::numeric_limits<uInt>::max()));
    c = crc32(c, data, chunk);
    data += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(c);
}

}  // namespace detail

namespace {

size_t element_size(DType t) { return t == DType::kFloat32 ? 4 : 1; }

}  // namespace

std::vector<std::uint8_t> encode_volume(const VolumeFile& v) {
  for (size_t a = 0; a < 3; ++a) {
    if (v.dims[a] < 1 || v.dims[a] > std::numeric_limits<std::uint32_t>::max()) {
      throw ValidationError("volume dimension " + std::to_string(a) + " out of range");
    }
    if (!(v.spacing[a] > 0.0f) || !std::isfinite(v.spacing[a])) {
      throw ValidationError("volume spacing must be strictly positive and finite");
    }
  }
  const auto n = static_cast<size_t>(v.numel());
  if (v.dtype == DType::kFloat32) {
    if (v.f32.size() != n) throw ValidationError("f32 payload length does not match dimensions");
    for (float x : v.f32)
      if (!std::isfinite(x)) throw ValidationError("volume data must be finite");
  } else if (v.dtype == DType::kUInt8) {
    if (v.u8.size() != n) throw ValidationError("u8 payload length does not match dimensions");
    for (std::uint8_t x : v.u8)
      if (x > 1) throw ValidationError("mask must be binary");
  } else {
    throw ValidationError("unknown volume dtype");
  }

  detail::ByteWriter w;
  w.bytes("SVOL", 4);
  w.u16(kVolumeVersion);
  w.u16(static_cast<std::uint16_t>(v.dtype));
  for (Index d : v.dims) w.u32(static_cast<std::uint32_t>(d));
  for (float s : v.spacing) w.f32(s);
  w.u32(detail::crc32_of(w.buffer().data(), w.size()));
  const size_t payload_at = w.size();
  if (v.dtype == DType::kFloat32) {
    for (float x : v.f32) w.f32(x);
  } else {
    w.bytes(v.u8.data(), v.u8.size());
  }
  w.u32(detail::crc32_of(w.buffer().data() + payload_at, w.size() - payload_at));
  return std::move(w.buffer());
}

VolumeFile decode_volume(std::span<const std::uint8_t> bytes, const std::string& source) {
  detail::ByteReader r(bytes.data(), bytes.size(), source);
  r.need(kVolumeHeaderSize);
  if (std::memcmp(bytes.data(), "SVOL", 4) != 0) throw FormatError(source + ": bad magic, expected SVOL", 0);
  r.skip(4);
  const std::uint16_t version = r.u16();
  if (version != kVolumeVersion) {
    throw FormatError(source + ": unsupported version " + std::to_string(version), 4);
  }
  const std::uint16_t dtype = r.u16();
  if (dtype != static_cast<std::uint16_t>(DType::kFloat32) && dtype != static_cast<std::uint16_t>(DType::kUInt8)) {
    throw FormatError(source + ": unknown dtype code " + std::to_string(dtype), 6);
  }
  VolumeFile v;
  v.dtype = static_cast<DType>(dtype);
  for (size_t a = 0; a < 3; ++a) v.dims[a] = r.u32();
  for (size_t a = 0; a < 3; ++a) v.spacing[a] = r.f32();
  const std::uint32_t stored = r.u32();
  if (stored != detail::crc32_of(bytes.data(), 32)) throw FormatError(source + ": header checksum mismatch", 32);
  for (size_t a = 0; a < 3; ++a) {
    if (v.dims[a] == 0) throw FormatError(source + ": zero dimension", 8 + 4 * a);
    if (!(v.spacing[a] > 0.0f) || !std::isfinite(v.spacing[a])) {
      throw FormatError(source + ": spacing must be positive and finite", 20 + 4 * a);
    }
  }
  const std::uint64_t n = static_cast<std::uint64_t>(v.dims[0]) * static_cast<std::uint64_t>(v.dims[1]) *
                          static_cast<std::uint64_t>(v.dims[2]);
  const std::uint64_t payload = n * element_size(v.dtype);
  const std::uint64_t expected = kVolumeHeaderSize + payload + 4;
  if (bytes.size() != expected) {
    throw FormatError(source + ": " + (bytes.size() < expected ? "truncated" : "trailing data") +
                          ", expected " + std::to_string(expected) + " bytes but got " +
                          std::to_string(bytes.size()),
                      std::min<std::uint64_t>(bytes.size(), expected));
  }
  const std::uint8_t* p = bytes.data() + kVolumeHeaderSize;
  detail::ByteReader tail(bytes.data() + kVolumeHeaderSize + payload, 4, source);
  if (tail.u32() != detail::crc32_of(p, static_cast<size_t>(payload))) {
    throw FormatError(source + ": payload checksum mismatch", kVolumeHeaderSize + payload);
  }
  if (v.dtype == DType::kFloat32) {
    v.f32.resize(static_cast<size_t>(n));
    detail::ByteReader pr(p, static_cast<size_t>(payload), source);
    for (auto& x : v.f32) x = pr.f32();
  } else {
    v.u8.assign(p, p + payload);
    for (size_t i = 0; i < v.u8.size(); ++i) {
      if (v.u8[i] > 1) throw FormatError(source + ": mask must be binary", kVolumeHeaderSize + i);
    }
  }
  return v;
}

void write_volume(const std::string& path, const VolumeFile& v) { detail::write_file(path, encode_volume(v)); }

VolumeFile read_volume(const std::string& path) {
  const auto bytes = detail::read_file(path);
  return decode_volume(bytes, path);
}

void write_intensity(const std::string& path, const Tensor& volume, const Spacing& spacing) {
  require_rank(volume, 5, "write_intensity");
  if (volume.dim(0) != 1 || volume.dim(1) != 1) {
    throw DimensionError("write_intensity: expected (1, 1, D, H, W), got " + shape_string(volume.shape()));
  }
  VolumeFile v;
  v.dtype = DType::kFloat32;
  v.dims = {volume.dim(2), volume.dim(3), volume.dim(4)};
  for (size_t a = 0; a < 3; ++a) v.spacing[a] = static_cast<float>(spacing[a]);
  v.f32.assign(volume.values().begin(), volume.values().end());
  write_volume(path, v);
}

Tensor read_intensity(const std::string& path, Spacing* spacing) {
  const VolumeFile v = read_volume(path);
  if (v.dtype != DType::kFloat32) throw FormatError(path + ": expected an f32 intensity volume", 6);
  if (spacing)
    for (size_t a = 0; a < 3; ++a) (*spacing)[a] = v.spacing[a];
  Tensor t({1, 1, v.dims[0], v.dims[1], v.dims[2]});
  for (Index i = 0; i < t.numel(); ++i) t[i] = static_cast<Real>(v.f32[static_cast<size_t>(i)]);
  return t;
}

void write_mask(const std::string& path, const BinaryMask3& mask) {
  VolumeFile v;
  v.dtype = DType::kUInt8;
  v.dims = mask.dims();
  for (size_t a = 0; a < 3; ++a) v.spacing[a] = static_cast<float>(mask.spacing()[a]);
  v.u8.assign(mask.values().begin(), mask.values().end());
  write_volume(path, v);
}

BinaryMask3 read_mask(const std::string& path) {
  VolumeFile v = read_volume(path);
  if (v.dtype != DType::kUInt8) throw FormatError(path + ": expected a u8 mask volume", 6);
  return BinaryMask3(v.dims, std::move(v.u8), {v.spacing[0], v.spacing[1], v.spacing[2]});
}

WAVECOR_END_NAMESPACE
