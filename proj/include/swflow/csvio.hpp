// CSV output with RFC 4180 quoting and atomic file writes.
#pragma once

#include <string>
#include <vector>

namespace swflow {

std::string csv_quote(const std::string& field);
std::string csv_row(const std::vector<std::string>& fields);

// Full-precision decimal formatting (17 significant digits).
std::string format_full(double v);

// Writes to a temporary sibling then renames, so readers never see partial
// files and failed runs leave nothing behind.
void write_file_atomic(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

// FNV-1a 64-bit content hash, hex-encoded.
std::string file_hash_hex(const std::string& path);

}  // namespace swflow
