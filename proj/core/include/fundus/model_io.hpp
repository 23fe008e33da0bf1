#pragma once

// Model file layout (all integers little-endian):
//   "MLNN"                      4-byte magic
//   u32 version                 currently 1
//   u32 len + text              architecture block (flat key=value)
//   u32 len + text              preprocess block (flat key=value)
//   u32 tensor count
//   per tensor: u16 name length, UTF-8 name, u8 rank, u32 dims[rank], f32 payload

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fundus/network.hpp"

namespace fundus {

inline constexpr std::uint32_t kModelFormatVersion = 1;

std::vector<std::uint8_t> serialize_model(const ModelParams& params);
// Throws FormatError ("bad magic", "unsupported version", "unexpected end of
// file", tensor count/shape inconsistencies).
ModelParams deserialize_model(std::span<const std::uint8_t> bytes);

void save_model(const ModelParams& params, const std::string& path);
ModelParams load_model(const std::string& path);

// FNV-1a 64 of the serialized bytes, as 16 hex digits.
std::string model_hash(const ModelParams& params);

}  // namespace fundus
