#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace atomize {

// Shortest representation that round-trips exactly (%.17g).
std::string format_double(double v);

// 16 hex digits of a 64-bit content hash.
std::string hex_digest(std::string_view content);

// Writes to a sibling temp file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

}  // namespace atomize
