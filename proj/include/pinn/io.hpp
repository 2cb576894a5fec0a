#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace pinn::io {

// Shortest text that parses back to the identical double (17 significant digits).
std::string format_double(double v);
// Shortest text that still parses back exactly; for configs and metadata.
std::string format_shortest(double v);
double parse_double(std::string_view text);
long long parse_int(std::string_view text);

std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

// FNV-1a, 64 bit.
std::uint64_t fnv1a(std::string_view data, std::uint64_t h = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

using Metadata = std::map<std::string, std::string>;

// Splits "key=value"; returns false when the line has no '='.
bool split_key_value(std::string_view line, std::string& key, std::string& value);

std::string read_file(const std::filesystem::path& path);
// Writes through a temporary file and renames, so readers never see a partial file.
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace pinn::io
