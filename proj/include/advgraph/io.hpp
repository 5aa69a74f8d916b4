#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace advgraph {

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);
bool file_exists(const std::string& path);

// Splits on '\n', dropping a trailing '\r' per line and a trailing empty
// line caused by a final newline.
std::vector<std::string> split_lines(std::string_view text);
std::vector<std::string> split_fields(std::string_view line, char sep);

// Exact decimal rendering: 17 significant digits round-trip IEEE binary64,
// so text artifacts stay bit-reproducible through save/load.
std::string format_double(double v);
double parse_double(std::string_view s, const std::string& context);
long long parse_int(std::string_view s, const std::string& context);

// FNV-1a 64 over raw bytes. Used as the content fingerprint in stage
// manifests; a provenance check, not a cryptographic guarantee.
uint64_t fingerprint_bytes(std::string_view bytes);
uint64_t fingerprint_file(const std::string& path);
std::string fingerprint_hex(uint64_t fp);

} // namespace advgraph
