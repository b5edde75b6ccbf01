#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "anisohit/error.hpp"

namespace anisohit::cli {

// How observed is compared with reference.
enum class Check {
  Abs,      // |observed - reference| <= tolerance
  Rel,      // |observed - reference| <= tolerance |reference|
  Factor,   // reference / tolerance <= observed <= reference * tolerance
  AtMost,   // observed <= reference
  Below,    // observed < reference
  AtLeast,  // observed >= reference
};

struct ReportRow {
  std::string experiment;
  std::string params;
  double observed = 0.0;
  double reference = 0.0;
  double tolerance = 0.0;
  Check check = Check::Abs;

  bool pass() const {
    if (std::isnan(observed) || std::isnan(reference)) return false;
    switch (check) {
      case Check::Abs: return std::abs(observed - reference) <= tolerance;
      case Check::Rel: return std::abs(observed - reference) <= tolerance * std::abs(reference);
      case Check::Factor: return observed >= reference / tolerance && observed <= reference * tolerance;
      case Check::AtMost: return observed <= reference;
      case Check::Below: return observed < reference;
      case Check::AtLeast: return observed >= reference;
    }
    return false;
  }
};

// 12 significant digits.
inline std::string format_value(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline std::string format_tolerance(const ReportRow& r) {
  switch (r.check) {
    case Check::Abs: return "abs:" + format_value(r.tolerance);
    case Check::Rel: return "rel:" + format_value(r.tolerance);
    case Check::Factor: return "factor:" + format_value(r.tolerance);
    case Check::AtMost: return "<=";
    case Check::Below: return "<";
    case Check::AtLeast: return ">=";
  }
  return "";
}

inline constexpr const char* kCsvHeader = "experiment,params,observed,reference,tolerance,pass";

inline std::string to_csv(const std::vector<ReportRow>& rows) {
  if (rows.empty()) throw DomainError("report: no rows");
  std::string s = std::string(kCsvHeader) + "\n";
  for (const auto& r : rows) {
    s += r.experiment + "," + r.params + "," + format_value(r.observed) + "," + format_value(r.reference) + "," +
         format_tolerance(r) + "," + (r.pass() ? "true" : "false") + "\n";
  }
  return s;
}

// Writes next to the destination and renames, so a failed run leaves no partial file.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("report: cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw IoError("report: write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("report: cannot rename onto " + path.string());
  }
}

inline void emit_csv(const std::vector<ReportRow>& rows, const std::filesystem::path& path) {
  write_atomic(path, to_csv(rows));
}

inline bool all_pass(const std::vector<ReportRow>& rows) {
  for (const auto& r : rows)
    if (!r.pass()) return false;
  return !rows.empty();
}

}  // namespace anisohit::cli
