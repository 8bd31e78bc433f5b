#pragma once

// Binary container shared by every artifact the pipeline writes.
//
//   bytes 0..5   magic "FRFD1\n"
//   bytes 6..9   header length L, unsigned 32-bit little-endian
//   next L bytes JSON header (UTF-8): schema, version, shape, dtype,
//                metadata, content_hash
//   remainder    payload, little-endian IEEE-754 float64, row-major;
//                complex128 is stored as interleaved (re, im) pairs
//
// content_hash is the SHA-256 of the canonical header fields (schema,
// version, shape, dtype, metadata, serialized without the hash) followed by
// the payload bytes.

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace frfnet {

inline constexpr char kContainerMagic[] = "FRFD1\n";
inline constexpr std::size_t kContainerMagicSize = 6;

struct Container {
  std::string schema;
  int version = 1;
  std::vector<std::int64_t> shape;
  std::string dtype = "float64";  // or "complex128"
  nlohmann::json metadata = nlohmann::json::object();
  std::vector<double> payload;

  /// Number of float64 values implied by shape and dtype.
  std::size_t expected_payload_size() const;
};

std::string content_hash(const Container& container);

std::string encode_container(const Container& container);
/// Throws DataError on bad magic, truncation, shape/payload mismatch or a
/// content hash that does not verify.
Container decode_container(const std::string& bytes, const std::string& origin = "<memory>");

void write_container(const std::string& path, const Container& container);
Container read_container(const std::string& path);
/// read_container plus a schema check.
Container read_container(const std::string& path, const std::string& expected_schema);

}  // namespace frfnet
