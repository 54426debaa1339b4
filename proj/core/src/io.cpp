#include "abjm/io.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "abjm/errors.hpp"

namespace abjm {

namespace {

void byteswap_if_big_endian(std::uint64_t& bits) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t out = 0;
    for (int b = 0; b < 8; ++b) out |= ((bits >> (8 * b)) & 0xFFu) << (8 * (7 - b));
    bits = out;
  }
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Report::Report() { add("schema", std::string("vortexsuite-report/1")); }

void Report::add(const std::string& key, const std::string& value) {
  entries_.emplace_back(key, value);
}
void Report::add(const std::string& key, double value) { add(key, format_double(value)); }
void Report::add(const std::string& key, int value) { add(key, std::to_string(value)); }
void Report::add(const std::string& key, bool value) { add(key, std::string(value ? "1" : "0")); }

bool Report::has(const std::string& key) const {
  for (const auto& [k, v] : entries_)
    if (k == key) return true;
  return false;
}

std::string Report::text() const {
  std::string out;
  for (const auto& [k, v] : entries_) {
    out += k;
    out += " = ";
    out += v;
    out += '\n';
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

void write_field(const std::filesystem::path& path, const double* data, int nx, int ny,
                 double dx, double dy) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
  std::string header = "ROWS " + std::to_string(ny) + " COLS " + std::to_string(nx) + " DX " +
                       format_double(dx) + " DY " + format_double(dy) + "\n";
  f.write(header.data(), static_cast<std::streamsize>(header.size()));
  const std::size_t count = static_cast<std::size_t>(nx) * ny;
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, &data[i], sizeof(bits));
    byteswap_if_big_endian(bits);
    f.write(reinterpret_cast<const char*>(&bits), sizeof(bits));
  }
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

FieldFile read_field(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for reading: " + path.string());
  std::string header;
  std::getline(f, header);
  FieldFile out;
  {
    std::istringstream hs(header);
    std::string rows_tag, cols_tag, dx_tag, dy_tag;
    hs >> rows_tag >> out.ny >> cols_tag >> out.nx >> dx_tag >> out.dx >> dy_tag >> out.dy;
    if (rows_tag != "ROWS" || cols_tag != "COLS" || dx_tag != "DX" || dy_tag != "DY" || !hs)
      throw std::runtime_error("malformed field header: " + path.string());
  }
  const std::size_t count = static_cast<std::size_t>(out.nx) * out.ny;
  out.values.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t bits;
    f.read(reinterpret_cast<char*>(&bits), sizeof(bits));
    if (!f) throw std::runtime_error("truncated field payload: " + path.string());
    byteswap_if_big_endian(bits);
    std::memcpy(&out.values[i], &bits, sizeof(bits));
  }
  return out;
}

void write_profile_csv(const std::filesystem::path& path, const FieldState& state,
                       const std::vector<std::pair<double, std::size_t>>& samples,
                       const std::string& coord_name) {
  const int m = state.u.species();
  std::string out = "# schema = vortexsuite-profile/1\n";
  out += coord_name;
  for (int i = 0; i < m; ++i) out += ",u_" + std::to_string(i + 1);
  for (int i = 0; i < m; ++i) out += ",exp_u_" + std::to_string(i + 1);
  out += '\n';
  for (const auto& [coord, node] : samples) {
    out += format_double(coord);
    for (int i = 0; i < m; ++i) out += "," + format_double(state.u.field(i)[node]);
    for (int i = 0; i < m; ++i) out += "," + format_double(state.exp_u.field(i)[node]);
    out += '\n';
  }
  write_text_file(path, out);
}

void write_scan_csv(const std::filesystem::path& path, const std::vector<ScanRow>& rows,
                    const std::string& param_name, int species) {
  std::string out = "# schema = vortexsuite-scan/1\n";
  out += param_name + ",feasible";
  for (int i = 0; i < species; ++i) out += ",K_" + std::to_string(i + 1);
  for (int i = 0; i < species; ++i) out += ",constraint_residual_" + std::to_string(i + 1);
  for (int i = 0; i < species; ++i) out += ",min_u_" + std::to_string(i + 1);
  for (int i = 0; i < species; ++i) out += ",max_u_" + std::to_string(i + 1);
  out += ",functional,iterations,error\n";
  for (const ScanRow& r : rows) {
    out += format_double(r.value);
    out += r.feasible ? ",1" : ",0";
    for (int i = 0; i < species; ++i)
      out += "," + (i < static_cast<int>(r.K.size()) ? format_double(r.K[i]) : std::string());
    auto emit_opt = [&](const std::vector<double>& v, int i) {
      out += ",";
      if (r.feasible && r.error.empty() && i < static_cast<int>(v.size()))
        out += format_double(v[i]);
    };
    for (int i = 0; i < species; ++i) emit_opt(r.constraint_residual, i);
    for (int i = 0; i < species; ++i) emit_opt(r.min_u, i);
    for (int i = 0; i < species; ++i) emit_opt(r.max_u, i);
    out += ",";
    if (r.feasible && r.error.empty()) out += format_double(r.functional);
    out += "," + std::to_string(r.iterations);
    out += ",";
    out += r.error;
    out += '\n';
  }
  write_text_file(path, out);
}

}  // namespace abjm
