#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace vbench::util {

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);

// Collapses every run of whitespace to a single space and trims the ends.
std::string normalize_whitespace(std::string_view s);

bool contains_ci(std::string_view haystack_lower, std::string_view needle_lower);

std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
std::string replace_all(std::string s, std::string_view from, std::string_view to);

// Number of whitespace-delimited tokens; the synthetic backend's token unit.
long count_tokens(std::string_view s);

// FNV-1a 64-bit; stable across platforms, used for deterministic jitter.
std::uint64_t fnv1a(std::string_view s);

}  // namespace vbench::util
