#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "tvnet/errors.hpp"
#include "tvnet/panel.hpp"

namespace tvnet::io {

/// Shortest round-trip is not required; 17 significant digits always are.
inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto next = line.find(sep, pos);
    out.push_back(trim(line.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos)));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

inline std::string unquote(std::string_view s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return std::string(s);
}

}  // namespace detail

/// Parses a CSV panel: a mandatory header row naming the series, then one
/// row per time point with numeric cells only.
inline Panel parse_csv(std::istream& in, const std::string& label = "input") {
  std::string line;
  if (!std::getline(in, line)) throw DataError(label + ": empty file, a header row is required");
  std::vector<std::string> names;
  for (auto cell : detail::split(line, ',')) {
    if (cell.empty()) throw DataError(label + ": empty column name in header");
    names.push_back(detail::unquote(cell));
  }
  const std::size_t p = names.size();
  std::vector<std::vector<double>> cols(p);
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split(line, ',');
    if (cells.size() != p)
      throw DataError(label + ": row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                      " cells, expected " + std::to_string(p));
    for (std::size_t i = 0; i < p; ++i) {
      const auto c = cells[i];
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
      if (c.empty() || ec != std::errc() || ptr != c.data() + c.size() || !std::isfinite(v))
        throw DataError(label + ": row " + std::to_string(row) + ", column '" + names[i] +
                        "': missing or non-numeric cell '" + std::string(c) + "'");
      cols[i].push_back(v);
    }
  }
  return Panel::from_columns(cols, std::move(names));
}

inline Panel read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open input file " + path.string());
  return parse_csv(in, path.string());
}

inline std::string to_csv(const Panel& panel) {
  std::ostringstream os;
  for (std::size_t i = 0; i < panel.p(); ++i) os << (i ? "," : "") << panel.names()[i];
  os << '\n';
  for (std::size_t j = 1; j <= panel.n(); ++j) {
    for (std::size_t i = 0; i < panel.p(); ++i) os << (i ? "," : "") << fmt(panel.at(j, i));
    os << '\n';
  }
  return os.str();
}

/// Writes through a temporary file in the same directory and renames it
/// into place, so readers never see a partial file.
inline void write_atomic(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw ConfigError("failed writing " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

/// Collects output files and commits them together once everything has
/// been computed.
class OutputBundle {
 public:
  void add(std::string name, std::string content) { files_.emplace_back(std::move(name), std::move(content)); }

  void commit(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    for (const auto& [name, content] : files_) write_atomic(dir / name, content);
  }

  [[nodiscard]] const std::vector<std::pair<std::string, std::string>>& files() const noexcept { return files_; }

 private:
  std::vector<std::pair<std::string, std::string>> files_;
};

}  // namespace tvnet::io
