#include "vbench/util/numfmt.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <string>

namespace vbench::util {

std::string format_fixed(double x, int decimals) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  double scale = 1.0;
  for (int i = 0; i < decimals; ++i) scale *= 10.0;
  // nearbyint under the default FE_TONEAREST mode rounds exact ties to even.
  double r = std::nearbyint(x * scale);
  if (r == 0.0) r = 0.0;  // normalize -0
  long long v = static_cast<long long>(r);
  bool neg = v < 0;
  unsigned long long a = neg ? static_cast<unsigned long long>(-v) : static_cast<unsigned long long>(v);
  unsigned long long unit = static_cast<unsigned long long>(scale);
  unsigned long long ip = decimals ? a / unit : a;
  std::string out = neg ? "-" : "";
  out += std::to_string(ip);
  if (decimals) {
    std::string frac = std::to_string(a % unit);
    out += '.';
    out += std::string(static_cast<size_t>(decimals) - frac.size(), '0');
    out += frac;
  }
  return out;
}

std::string format_fixed_opt(const std::optional<double>& x, int decimals) {
  return x ? format_fixed(*x, decimals) : std::string();
}

std::string format_temperature(double t) {
  char buf[64];
  for (int prec = 1; prec <= 9; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*f", prec, t);
    if (std::strtod(buf, nullptr) == t) return buf;
  }
  std::snprintf(buf, sizeof(buf), "%.9f", t);
  return buf;
}

}  // namespace vbench::util
