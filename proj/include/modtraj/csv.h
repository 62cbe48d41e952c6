#ifndef MODTRAJ_CSV_H_
#define MODTRAJ_CSV_H_

#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

namespace modtraj {

// Fixed formatting for every number written to an artifact so that reruns
// are byte-identical. Non-finite values and nullopt become an empty field.
inline std::string fmt_double(double v) {
  if (!std::isfinite(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::string fmt_double(std::optional<double> v) { return v ? fmt_double(*v) : ""; }

inline const char* fmt_bool(bool b) { return b ? "1" : "0"; }

// Quotes a field when it contains a separator, quote or newline.
inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace modtraj

#endif  // MODTRAJ_CSV_H_
