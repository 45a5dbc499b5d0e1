#pragma once

#include <string>
#include <string_view>

namespace vbench::util {

// Lowercase hex SHA-256 digest (64 chars).
std::string sha256_hex(std::string_view data);

// Digest of a file's bytes; throws std::runtime_error if unreadable.
std::string sha256_file_hex(const std::string& path);

}  // namespace vbench::util
