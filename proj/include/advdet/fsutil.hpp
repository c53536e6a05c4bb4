#pragma once

#include <cstdint>
#include <string>

namespace advdet {

// Writes via a temp file in the same directory followed by rename, so an
// interrupted run never leaves a half-written artifact.
void write_file_atomic(const std::string& path, const std::string& bytes);

std::string read_file(const std::string& path);
bool file_exists(const std::string& path);
void ensure_dir(const std::string& path);

// FNV-1a 64-bit content hash, hex-encoded; used for artifact ids in manifests.
std::string fnv1a64_hex(const std::string& bytes);

}  // namespace advdet
