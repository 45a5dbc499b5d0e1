#pragma once

#include <optional>
#include <string>

namespace vbench::util {

// Fixed-point decimal string with round-half-to-even at the last kept digit.
// All metric values are serialized through this (default 3 decimals).
std::string format_fixed(double x, int decimals = 3);

// Optional-aware variant: absent values serialize as the empty string.
std::string format_fixed_opt(const std::optional<double>& x, int decimals = 3);

// Canonical temperature rendering used in trial ids and CSV rows:
// shortest decimal form with at least one fractional digit ("0.0", "0.7", "0.15").
std::string format_temperature(double t);

}  // namespace vbench::util
