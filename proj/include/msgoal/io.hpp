#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "msgoal/msfem.hpp"

namespace msgoal {

// 64-bit FNV-1a over raw bytes, used for cache keys.
struct Hasher {
  std::uint64_t h = 1469598103934665603ULL;
  void bytes(const void* p, std::size_t n);
  template <class T>
  void value(const T& v) {
    bytes(&v, sizeof(T));
  }
  void vec(const Vec& v) { bytes(v.data(), sizeof(double) * v.size()); }
  std::string hex() const;
};

// Binary vector files: int64 length followed by raw doubles. Reads return
// nothing when the file is missing or its length differs from `expected`.
std::optional<Vec> read_vector(const std::string& path, std::int64_t expected);
// Writes through a temporary file and a rename.
void write_vector(const std::string& path, const Vec& v);

// Fixed 17 significant digits.
std::string fmt(double x);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}
  void add(std::vector<std::string> row);
  void write(const std::string& path) const;
  void write(std::ostream& out) const;
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

std::vector<std::vector<std::string>> read_csv(const std::string& path);

// "key = value" lines, '#' starts a comment. Throws on malformed lines.
using KeyValues = std::map<std::string, std::string>;
KeyValues read_config(const std::string& path);
KeyValues parse_config(const std::string& text);
void write_config(const std::string& path, const KeyValues& kv);

// Legacy ASCII VTK writers.
struct GridFields {
  std::vector<std::pair<std::string, const Vec*>> point;  // truth-grid nodal fields
  std::vector<std::pair<std::string, const std::vector<Vec2>*>> cell;  // per truth-grid triangle
};
// Quads of `stride` x `stride` truth-grid cells; point data sampled, cell
// vectors averaged over the block.
void write_grid_vtk(const std::string& path, const TruthGrid& g, const GridFields& f, int stride);

// One quad per leaf with the discretization parameters and optional per-leaf maps.
void write_mesh_vtk(const std::string& path, const CoarseMesh& mesh, double eps,
                    const std::vector<std::pair<std::string, std::vector<double>>>& cell_data = {});

}  // namespace msgoal
