#pragma once

#include <cmath>
#include <cstdio>
#include <string>

namespace ergodyn {

/// Shortest-form-independent rendering used in every CSV: 17 significant
/// digits, so equal doubles always print identically.
inline std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace ergodyn
