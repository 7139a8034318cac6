#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace mtlsa::textio {

/// 17-significant-digit rendering; parses back bit-exactly.
std::string format_double(double value);

/// Strict parse of a full token. Throws std::invalid_argument on junk.
double parse_double(std::string_view token);
std::int64_t parse_int(std::string_view token);
std::uint64_t parse_uint(std::string_view token);

std::vector<std::string> split(std::string_view line, char delimiter);
std::string_view trim(std::string_view text);
std::string join(const std::vector<std::string>& parts, char delimiter);

/// Writes `path.partial` then renames it over `path`. An interrupted run leaves
/// only the `.partial` file behind.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

/// Line-oriented `key = value` text. Blank lines and `#` comments are skipped.
/// Throws ParseError on a line without '='.
std::map<std::string, std::string> parse_key_values(std::string_view text,
                                                     const std::string& source);
std::string render_key_values(const std::vector<std::pair<std::string, std::string>>& entries);

}  // namespace mtlsa::textio
