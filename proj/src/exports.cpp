#include "llab/exports.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "llab/errors.hpp"

namespace llab {

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void CsvWriter::add_row(const std::vector<std::string>& cells) {
  if (cells.size() != header_.size()) {
    throw std::invalid_argument("csv row has " + std::to_string(cells.size()) +
                                " cells, expected " + std::to_string(header_.size()));
  }
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) line += ',';
    line += cells[i];
  }
  rows_.push_back(std::move(line));
}

void CsvWriter::add_row(const std::vector<double>& cells) {
  std::vector<std::string> s;
  s.reserve(cells.size());
  for (double v : cells) s.push_back(format_double(v));
  add_row(s);
}

void CsvWriter::write(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);  // binary: no platform newline surprises
  if (!os) throw FormatError("cannot open for writing: " + path.string());
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (i) os << ',';
    os << header_[i];
  }
  os << '\n';
  for (const std::string& row : rows_) os << row << '\n';
}

void write_pgm(const std::filesystem::path& path, std::size_t width, std::size_t height,
               const std::vector<double>& values, bool log_scale, nlohmann::json sidecar_extra) {
  if (values.size() != width * height) {
    throw std::invalid_argument("pgm: value count does not match dimensions");
  }
  std::vector<double> mapped(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    mapped[i] = log_scale ? std::log10(values[i] + 1e-12) : values[i];
  }
  double vmin = std::numeric_limits<double>::infinity();
  double vmax = -std::numeric_limits<double>::infinity();
  for (double v : mapped) {
    if (std::isfinite(v)) {
      vmin = std::min(vmin, v);
      vmax = std::max(vmax, v);
    }
  }
  if (!std::isfinite(vmin)) {
    vmin = 0.0;
    vmax = 1.0;
  }
  const double span = vmax > vmin ? vmax - vmin : 1.0;

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open for writing: " + path.string());
  os << "P5\n" << width << " " << height << "\n255\n";
  for (double v : mapped) {
    // Non-finite cells (overflow markers) render as full white.
    const double g = std::isfinite(v) ? (v - vmin) / span : 1.0;
    const int byte = static_cast<int>(std::lround(255.0 * std::clamp(g, 0.0, 1.0)));
    os.put(static_cast<char>(byte));
  }

  nlohmann::json sidecar = std::move(sidecar_extra);
  sidecar["min"] = vmin;
  sidecar["max"] = vmax;
  sidecar["log_scale"] = log_scale;
  sidecar["width"] = width;
  sidecar["height"] = height;
  write_json(path.string() + ".json", sidecar);
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open for writing: " + path.string());
  os << j.dump(2) << '\n';
}

}  // namespace llab
