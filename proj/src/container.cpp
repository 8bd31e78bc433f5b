#include "frfnet/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "frfnet/errors.hpp"
#include "frfnet/hashing.hpp"

namespace frfnet {

static_assert(std::endian::native == std::endian::little, "container I/O assumes a little-endian host");

namespace {

nlohmann::json canonical_header(const Container& c) {
  return nlohmann::json{{"schema", c.schema}, {"version", c.version}, {"shape", c.shape}, {"dtype", c.dtype},
                        {"metadata", c.metadata}};
}

}  // namespace

std::size_t Container::expected_payload_size() const {
  std::size_t n = 1;
  for (auto d : shape) {
    if (d < 0) throw DataError("container: negative dimension in shape");
    n *= static_cast<std::size_t>(d);
  }
  if (dtype == "complex128") return 2 * n;
  if (dtype == "float64") return n;
  throw DataError("container: unsupported dtype '" + dtype + "'");
}

std::string content_hash(const Container& c) {
  Sha256 h;
  h.update(canonical_header(c).dump());
  h.update(std::span<const double>(c.payload));
  return h.hex_digest();
}

namespace {

std::string header_text(const Container& c) {
  if (c.payload.size() != c.expected_payload_size())
    throw ContractError("container '" + c.schema + "': payload size does not match shape");
  nlohmann::json header = canonical_header(c);
  header["content_hash"] = content_hash(c);
  return header.dump();
}

std::string length_prefix(std::size_t n) {
  const auto length = static_cast<std::uint32_t>(n);
  std::string out(4, '\0');
  std::memcpy(out.data(), &length, 4);
  return out;
}

// Parses magic, length prefix and header; returns the header and the offset
// of the payload. `bytes` must hold at least the prefix and the header.
Container parse_header(const std::string& head, std::size_t total_size, const std::string& origin,
                       std::string& stored_hash, std::size_t& header_end) {
  if (head.size() < kContainerMagicSize + 4 || head.compare(0, kContainerMagicSize, kContainerMagic) != 0)
    throw DataError(origin + ": not a container file (bad magic)");
  std::uint32_t length = 0;
  std::memcpy(&length, head.data() + kContainerMagicSize, 4);
  header_end = kContainerMagicSize + 4 + length;
  if (total_size < header_end || head.size() < header_end) throw DataError(origin + ": truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(head.begin() + kContainerMagicSize + 4, head.begin() + static_cast<long>(header_end));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(origin + ": malformed header: " + e.what());
  }
  Container c;
  try {
    c.schema = header.at("schema").get<std::string>();
    c.version = header.at("version").get<int>();
    c.shape = header.at("shape").get<std::vector<std::int64_t>>();
    c.dtype = header.at("dtype").get<std::string>();
    c.metadata = header.at("metadata");
    stored_hash = header.at("content_hash").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(origin + ": incomplete header: " + e.what());
  }
  const std::size_t expected = c.expected_payload_size() * sizeof(double);
  const std::size_t payload_bytes = total_size - header_end;
  if (payload_bytes != expected)
    throw DataError(origin + ": payload holds " + std::to_string(payload_bytes) + " bytes, shape requires " +
                    std::to_string(expected) + (payload_bytes < expected ? " (truncated)" : ""));
  return c;
}

void verify_hash(const Container& c, const std::string& stored, const std::string& origin) {
  if (stored != content_hash(c)) throw DataError(origin + ": content hash mismatch");
}

}  // namespace

std::string encode_container(const Container& c) {
  const std::string text = header_text(c);
  std::string out;
  out.reserve(kContainerMagicSize + 4 + text.size() + c.payload.size() * sizeof(double));
  out.append(kContainerMagic, kContainerMagicSize);
  out += length_prefix(text.size());
  out += text;
  out.append(reinterpret_cast<const char*>(c.payload.data()), c.payload.size() * sizeof(double));
  return out;
}

Container decode_container(const std::string& bytes, const std::string& origin) {
  std::string stored;
  std::size_t header_end = 0;
  Container c = parse_header(bytes, bytes.size(), origin, stored, header_end);
  c.payload.resize(c.expected_payload_size());
  std::memcpy(c.payload.data(), bytes.data() + header_end, c.payload.size() * sizeof(double));
  verify_hash(c, stored, origin);
  return c;
}

void write_container(const std::string& path, const Container& container) {
  const std::string text = header_text(container);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out.write(kContainerMagic, kContainerMagicSize);
  out << length_prefix(text.size()) << text;
  out.write(reinterpret_cast<const char*>(container.payload.data()),
            static_cast<std::streamsize>(container.payload.size() * sizeof(double)));
  if (!out) throw DataError("failed writing '" + path + "'");
}

Container read_container(const std::string& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw DataError("cannot open container '" + path + "'");
  const auto total = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  std::string head(std::min<std::size_t>(total, kContainerMagicSize + 4), '\0');
  in.read(head.data(), static_cast<std::streamsize>(head.size()));
  if (head.size() == kContainerMagicSize + 4 && head.compare(0, kContainerMagicSize, kContainerMagic) == 0) {
    std::uint32_t length = 0;
    std::memcpy(&length, head.data() + kContainerMagicSize, 4);
    const std::size_t want = std::min<std::size_t>(total, head.size() + length);
    const std::size_t have = head.size();
    head.resize(want);
    in.read(head.data() + have, static_cast<std::streamsize>(want - have));
  }
  std::string stored;
  std::size_t header_end = 0;
  Container c = parse_header(head, total, path, stored, header_end);
  c.payload.resize(c.expected_payload_size());
  in.read(reinterpret_cast<char*>(c.payload.data()), static_cast<std::streamsize>(c.payload.size() * sizeof(double)));
  if (!in) throw DataError(path + ": failed reading payload");
  verify_hash(c, stored, path);
  return c;
}

Container read_container(const std::string& path, const std::string& expected_schema) {
  Container c = read_container(path);
  if (c.schema != expected_schema)
    throw DataError(path + ": expected schema '" + expected_schema + "', found '" + c.schema + "'");
  return c;
}

}  // namespace frfnet
