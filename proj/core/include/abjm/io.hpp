#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "abjm/torus.hpp"

namespace abjm {

// Ordered key-value report. Keys are emitted in insertion order so that
// identical runs produce byte-identical files; doubles are rendered with
// %.17g (round-trip exact). Wall-clock timing is deliberately not part of
// the file contract.
class Report {
 public:
  Report();  // starts with the schema line

  void add(const std::string& key, const std::string& value);
  void add(const std::string& key, double value);
  void add(const std::string& key, int value);
  void add(const std::string& key, bool value);

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }
  bool has(const std::string& key) const;
  std::string text() const;  // "key = value" lines

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

std::string format_double(double v);  // %.17g

void write_text_file(const std::filesystem::path& path, const std::string& text);

// Grid payload: one ASCII header line
//   ROWS <n_y> COLS <n_x> DX <spacing> DY <spacing>\n
// followed by row-major IEEE-754 binary64 little-endian values.
void write_field(const std::filesystem::path& path, const double* data, int nx, int ny,
                 double dx, double dy);

struct FieldFile {
  int nx = 0, ny = 0;
  double dx = 0.0, dy = 0.0;
  std::vector<double> values;
};

FieldFile read_field(const std::filesystem::path& path);

// Profile along a grid line through the domain for plotting: radial (from
// the disk center outward) or linear (torus row y = 0). Each sample is a
// (coordinate, flat node index) pair.
void write_profile_csv(const std::filesystem::path& path, const FieldState& state,
                       const std::vector<std::pair<double, std::size_t>>& samples,
                       const std::string& coord_name);

void write_scan_csv(const std::filesystem::path& path, const std::vector<ScanRow>& rows,
                    const std::string& param_name, int species);

}  // namespace abjm
