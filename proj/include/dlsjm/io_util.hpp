// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace dlsjm {

// Shortest representation that round-trips a double; stable across runs.
inline std::string fmt_g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path);
std::ifstream open_in(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);

// Git-style blob hash (SHA-1 over "blob <len>\0<content>"), hex encoded.
std::string git_blob_sha1(const std::filesystem::path& path);

}  // namespace dlsjm
