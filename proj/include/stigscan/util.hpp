#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace stigscan {

std::string_view trim(std::string_view s);
std::string_view trim_right(std::string_view s);
std::string to_lower(std::string_view s);
std::string to_upper(std::string_view s);
bool iequals(std::string_view a, std::string_view b);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

// 64-bit FNV-1a, rendered as 16 hex digits.
std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t value);

// One "key = item, item, ..." line of a reference table. Items may be
// double-quoted when they contain commas.
struct KeyValueList {
  std::string key;
  std::vector<std::string> values;
  int line = 0;
};

// Parses line-oriented key=value-list text. Blank lines and lines starting
// with '#' are skipped.
std::vector<KeyValueList> parse_key_value_lists(std::string_view text);

// Parses "key = value" lines (single value, '#' comments).
std::vector<std::pair<std::string, std::string>> parse_key_values(std::string_view text);

// Round-trippable shortest-ish rendering used in every emitted file.
std::string format_double(double value);
std::string format_fixed(double value, int decimals);

}  // namespace stigscan
