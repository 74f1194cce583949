#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace llab {

// Shortest round-trip formatting so CSVs are bit-for-bit reproducible and
// values survive a parse.
std::string format_double(double v);

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {}

  void add_row(const std::vector<std::string>& cells);
  void add_row(const std::vector<double>& cells);
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::string> rows_;
};

// Binary NetPBM P5, 8-bit, one pixel per cell, plus a JSON sidecar recording
// the value->gray mapping so the raw values stay recoverable.
// When log_scale is set, values go through log10(v + 1e-12) first.
void write_pgm(const std::filesystem::path& path, std::size_t width, std::size_t height,
               const std::vector<double>& values, bool log_scale = false,
               nlohmann::json sidecar_extra = nlohmann::json::object());

void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace llab
