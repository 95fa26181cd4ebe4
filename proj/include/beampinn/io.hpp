#pragma once

// Text output helpers shared by every artifact writer.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace beampinn {

/// Round-trip exact decimal form of a double (17 significant digits).
inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// First line of every CSV artifact: `# manifest: <run name>`.
inline std::string manifest_line(std::string_view run_name) { return "# manifest: " + std::string(run_name) + "\n"; }

class io_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw io_error("write failed for " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace beampinn
