#include "wavecor/checkpoint.hpp"

#include <cstring>
#include <map>

#include "byte_io.hpp"
#include "wavecor/errors.hpp"

WAVECOR_BEGIN_NAMESPACE

namespace {

constexpr std::uint8_t kParam = 0;
constexpr std::uint8_t kBuffer = 1;
constexpr size_t kMaxHeader = size_t{1} << 24;
constexpr size_t kMaxName = 4096;

void write_tensor(detail::ByteWriter& w, std::uint8_t kind, const std::string& name, const Tensor& t) {
  w.u8(kind);
  w.str(name);
  w.u8(static_cast<std::uint8_t>(t.rank()));
  for (Index d : t.shape()) w.u32(static_cast<std::uint32_t>(d));
  for (Real v : t.values()) w.f32(static_cast<float>(v));
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Network& net, const Json& metadata) {
  const Json header{{"network", to_json(net.config())}, {"seed", net.seed()}, {"metadata", metadata}};
  detail::ByteWriter w;
  w.bytes("CKPT", 4);
  w.u32(kCheckpointVersion);
  w.str(header.dump());
  const auto& store = net.store();
  w.u32(static_cast<std::uint32_t>(store.parameters().size() + store.buffers().size()));
  for (const auto& p : store.parameters()) write_tensor(w, kParam, p->name(), p->value());
  for (const auto& [name, t] : store.buffers()) write_tensor(w, kBuffer, name, *t);
  w.u32(detail::crc32_of(w.buffer().data(), w.size()));
  return std::move(w.buffer());
}

LoadedModel decode_checkpoint(std::span<const std::uint8_t> bytes, const std::string& source) {
  detail::ByteReader r(bytes.data(), bytes.size(), source);
  r.need(12);
  if (std::memcmp(bytes.data(), "CKPT", 4) != 0) throw FormatError(source + ": bad magic, expected CKPT", 0);
  r.skip(4);
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw FormatError(source + ": unsupported checkpoint version " + std::to_string(version), 4);
  }
  const size_t body = bytes.size() - 4;
  detail::ByteReader tail(bytes.data() + body, 4, source);
  if (tail.u32() != detail::crc32_of(bytes.data(), body)) throw FormatError(source + ": checksum mismatch", body);

  const size_t header_at = r.offset();
  Json header;
  try {
    header = Json::parse(r.str(kMaxHeader));
  } catch (const nlohmann::json::parse_error&) {
    throw FormatError(source + ": header is not valid JSON", header_at);
  }
  if (!header.is_object() || !header.contains("network") || !header.contains("seed")) {
    throw FormatError(source + ": header lacks network or seed", header_at);
  }
  NetworkConfig cfg;
  from_json(header.at("network"), cfg, "network");
  if (!header.at("seed").is_number_unsigned()) throw ValidationError("checkpoint header: seed must be unsigned");
  LoadedModel out;
  out.network = std::make_unique<Network>(cfg, header.at("seed").get<std::uint64_t>());
  out.metadata = header.value("metadata", Json::object());

  ParameterStore& store = out.network->store();
  const size_t expected = store.parameters().size() + store.buffers().size();
  const size_t count_at = r.offset();
  const std::uint32_t count = r.u32();
  if (count != expected) {
    throw FormatError(source + ": " + std::to_string(count) + " tensors stored but the network has " +
                          std::to_string(expected),
                      count_at);
  }
  std::map<std::pair<std::uint8_t, std::string>, std::pair<Tensor*, bool>> slots;
  for (const auto& p : store.parameters()) slots[{kParam, p->name()}] = {&p->value(), false};
  for (const auto& [name, t] : store.buffers()) slots[{kBuffer, name}] = {t.get(), false};
  for (std::uint32_t k = 0; k < count; ++k) {
    const size_t at = r.offset();
    const std::uint8_t kind = r.u8();
    if (kind != kParam && kind != kBuffer) {
      throw FormatError(source + ": unknown entry kind " + std::to_string(kind), at);
    }
    const std::string name = r.str(kMaxName);
    auto it = slots.find({kind, name});
    if (it == slots.end()) throw FormatError(source + ": tensor '" + name + "' does not exist in the network", at);
    if (it->second.second) throw FormatError(source + ": tensor '" + name + "' stored twice", at);
    it->second.second = true;
    Tensor* target = it->second.first;
    const std::uint8_t rank = r.u8();
    Shape shape(rank);
    for (auto& d : shape) d = r.u32();
    if (shape != target->shape()) {
      throw FormatError(source + ": tensor '" + name + "' has shape " + shape_string(shape) + ", expected " +
                            shape_string(target->shape()),
                        at);
    }
    r.need(static_cast<size_t>(target->numel()) * 4);
    for (Index i = 0; i < target->numel(); ++i) (*target)[i] = static_cast<Real>(r.f32());
  }
  if (r.remaining() != 4) throw FormatError(source + ": trailing data after tensors", r.offset());
  return out;
}

void save_checkpoint(const std::string& path, const Network& net, const Json& metadata) {
  detail::write_file(path, encode_checkpoint(net, metadata));
}

LoadedModel load_checkpoint(const std::string& path) {
  const auto bytes = detail::read_file(path);
  return decode_checkpoint(bytes, path);
}

WAVECOR_END_NAMESPACE
