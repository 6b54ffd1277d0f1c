#pragma once

// Artifact writers: long-format CSV tables, JSON summaries, and raw binary
// field dumps, with deterministic number formatting.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "wavepacket/common.hpp"
#include "wavepacket/grid.hpp"

namespace wp {

using json = nlohmann::json;

// shortest round-trippable decimal form, locale-independent
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  double back = std::strtod(buf, nullptr);
  if (back == v) {
    for (int prec = 1; prec < 17; ++prec) {
      char shorter[40];
      std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
      if (std::strtod(shorter, nullptr) == v) return shorter;
    }
  }
  return buf;
}

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> cells) {
    if (cells.size() != columns.size())
      throw ParameterError("CsvTable: row width differs from the header");
    rows.push_back(std::move(cells));
  }
  std::string to_string() const {
    std::string out;
    for (size_t i = 0; i < columns.size(); ++i)
      out += (i ? "," : "") + columns[i];
    out += "\n";
    for (const auto& row : rows) {
      for (size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + row[i];
      out += "\n";
    }
    return out;
  }
};

inline std::string cell(double v) { return format_double(v); }
inline std::string cell(const std::string& s) { return s; }

inline void write_text(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParameterError("cannot open for writing: " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParameterError("cannot open for reading: " + path.string());
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

// Raw little-endian dump of a complex field: int32 d, int32 N, float64 L,
// then N^d re/im pairs.
inline void write_field_binary(const std::filesystem::path& path,
                               const SpatialField& f) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParameterError("cannot open for writing: " + path.string());
  int32_t d = f.grid.d, N = f.grid.N;
  double L = f.grid.L;
  out.write(reinterpret_cast<const char*>(&d), sizeof d);
  out.write(reinterpret_cast<const char*>(&N), sizeof N);
  out.write(reinterpret_cast<const char*>(&L), sizeof L);
  for (const cplx& z : f.v) {
    double re = z.real(), im = z.imag();
    out.write(reinterpret_cast<const char*>(&re), sizeof re);
    out.write(reinterpret_cast<const char*>(&im), sizeof im);
  }
}

inline SpatialField read_field_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParameterError("cannot open for reading: " + path.string());
  int32_t d = 0, N = 0;
  double L = 0.0;
  in.read(reinterpret_cast<char*>(&d), sizeof d);
  in.read(reinterpret_cast<char*>(&N), sizeof N);
  in.read(reinterpret_cast<char*>(&L), sizeof L);
  SpatialField f(SpatialGrid(d, L, N));
  for (cplx& z : f.v) {
    double re = 0.0, im = 0.0;
    in.read(reinterpret_cast<char*>(&re), sizeof re);
    in.read(reinterpret_cast<char*>(&im), sizeof im);
    z = cplx(re, im);
  }
  if (!in) throw ParameterError("truncated field file: " + path.string());
  return f;
}

}  // namespace wp
