// Output plumbing: locale-independent number formatting, atomic file
// writes and a tiny stderr logger controlled by P_ENCLOSE_LOG.

#pragma once

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <string_view>
#include <system_error>

#include "penclose/core.hpp"

namespace penclose {

/// Shortest representation that round-trips; always '.' as decimal separator.
inline std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, ptr);
}

/// Writes to a sibling temporary and renames it over the target.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create directory " + path.parent_path().string());
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot open " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw Error(ErrorCode::Io, "write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot rename " + tmp.string() + " to " + path.string());
}

enum class LogLevel { Error = 0, Info = 1, Debug = 2 };

inline LogLevel log_level_from_env() {
  const char* raw = std::getenv("P_ENCLOSE_LOG");
  if (raw == nullptr) return LogLevel::Error;
  const std::string_view v(raw);
  if (v == "debug") return LogLevel::Debug;
  if (v == "info") return LogLevel::Info;
  return LogLevel::Error;
}

inline void log(LogLevel level, std::string_view message) {
  static const LogLevel threshold = log_level_from_env();
  if (static_cast<int>(level) > static_cast<int>(threshold)) return;
  static constexpr const char* names[] = {"error", "info", "debug"};
  std::cerr << "[p_enclose " << names[static_cast<int>(level)] << "] " << message << '\n';
}

}  // namespace penclose
