#pragma once

// Flat `key=value` text blocks, one entry per line. Used for every config
// snapshot (preprocessing, augmentation, architecture, training) so that
// model files, run metadata and user config files share one encoding.

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fundus {

using KvBlock = std::vector<std::pair<std::string, std::string>>;

// Serializes entries in order as "key=value\n".
std::string format_kv(const KvBlock& block);

// Blank lines and lines starting with '#' are skipped; whitespace around keys
// and values is trimmed. Throws ConfigError naming the line on bad syntax or
// a repeated key.
KvBlock parse_kv(std::string_view text);

// Shortest decimal form that parses back to the identical double.
std::string format_double(double value);

double parse_double(std::string_view key, std::string_view value);
std::uint64_t parse_u64(std::string_view key, std::string_view value);
bool parse_bool(std::string_view key, std::string_view value);
std::vector<std::uint32_t> parse_u32_list(std::string_view key, std::string_view value);
std::string format_u32_list(const std::vector<std::uint32_t>& values);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view contents);

}  // namespace fundus
