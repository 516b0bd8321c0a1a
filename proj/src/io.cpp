#include "msgoal/io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace msgoal {

void Hasher::bytes(const void* p, std::size_t n) {
  const auto* c = static_cast<const unsigned char*>(p);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= c[i];
    h *= 1099511628211ULL;
  }
}

std::string Hasher::hex() const {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << h;
  return s.str();
}

std::optional<Vec> read_vector(const std::string& path, std::int64_t expected) {
  std::ifstream in(path, std::ios::binary);
  std::int64_t n = -1;
  if (!in || !in.read(reinterpret_cast<char*>(&n), sizeof(n)) || n != expected) return std::nullopt;
  Vec v(n);
  if (!in.read(reinterpret_cast<char*>(v.data()), n * sizeof(double))) return std::nullopt;
  return v;
}

void write_vector(const std::string& path, const Vec& v) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    const std::int64_t n = v.size();
    out.write(reinterpret_cast<const char*>(&n), sizeof(n));
    out.write(reinterpret_cast<const char*>(v.data()), n * sizeof(double));
  }
  std::filesystem::rename(tmp, path);
}

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void CsvTable::add(std::vector<std::string> row) {
  if (row.size() != header_.size()) throw std::invalid_argument("csv: row width differs from header");
  rows_.push_back(std::move(row));
}

void CsvTable::write(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  write(out);
}

void CsvTable::write(std::ostream& out) const {
  auto line = [&](const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
    out << '\n';
  };
  line(header_);
  for (const auto& r : rows_) line(r);
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::vector<std::vector<std::string>> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> r;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) r.push_back(cell);
    out.push_back(std::move(r));
  }
  return out;
}

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

KeyValues parse_config(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  int no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("config line " + std::to_string(no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw std::invalid_argument("config line " + std::to_string(no) + ": empty key");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

KeyValues read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void write_config(const std::string& path, const KeyValues& kv) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& [k, v] : kv) out << k << " = " << v << '\n';
}

void write_grid_vtk(const std::string& path, const TruthGrid& g, const GridFields& f, int stride) {
  if (stride < 1 || g.N % stride != 0) throw std::invalid_argument("vtk: stride must divide the grid size");
  const int n = g.N / stride;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "# vtk DataFile Version 3.0\nmsgoal grid fields\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << (n + 1) * (n + 1) << " double\n";
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) out << fmt(g.x(i * stride)) << ' ' << fmt(g.y(j * stride)) << " 0\n";
  out << "CELLS " << n * n << ' ' << 5 * n * n << '\n';
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const int a = j * (n + 1) + i;
      out << "4 " << a << ' ' << a + 1 << ' ' << a + n + 2 << ' ' << a + n + 1 << '\n';
    }
  out << "CELL_TYPES " << n * n << '\n';
  for (int c = 0; c < n * n; ++c) out << "9\n";
  if (!f.point.empty()) {
    out << "POINT_DATA " << (n + 1) * (n + 1) << '\n';
    for (const auto& [name, v] : f.point) {
      out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
      for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i) out << fmt((*v)[g.node(i * stride, j * stride)]) << '\n';
    }
  }
  if (!f.cell.empty()) {
    out << "CELL_DATA " << n * n << '\n';
    for (const auto& [name, v] : f.cell) {
      out << "VECTORS " << name << " double\n";
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
          Vec2 s = Vec2::Zero();
          for (int b = 0; b < stride; ++b)
            for (int a = 0; a < stride; ++a)
              for (int t = 0; t < 2; ++t) s += (*v)[g.tri(i * stride + a, j * stride + b, t)];
          s /= 2.0 * stride * stride;
          out << fmt(s.x()) << ' ' << fmt(s.y()) << " 0\n";
        }
    }
  }
}

void write_mesh_vtk(const std::string& path, const CoarseMesh& mesh, double eps,
                    const std::vector<std::pair<std::string, std::vector<double>>>& cell_data) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  const int n = mesh.size();
  out << "# vtk DataFile Version 3.0\nmsgoal coarse mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << 4 * n << " double\n";
  for (const Leaf& l : mesh.leaves) {
    const Rect r = mesh.rect(l);
    out << fmt(r.x0) << ' ' << fmt(r.y0) << " 0\n" << fmt(r.x1) << ' ' << fmt(r.y0) << " 0\n";
    out << fmt(r.x1) << ' ' << fmt(r.y1) << " 0\n" << fmt(r.x0) << ' ' << fmt(r.y1) << " 0\n";
  }
  out << "CELLS " << n << ' ' << 5 * n << '\n';
  for (int k = 0; k < n; ++k) out << "4 " << 4 * k << ' ' << 4 * k + 1 << ' ' << 4 * k + 2 << ' ' << 4 * k + 3 << '\n';
  out << "CELL_TYPES " << n << '\n';
  for (int k = 0; k < n; ++k) out << "9\n";
  out << "CELL_DATA " << n << '\n';
  auto scalar = [&](const std::string& name, auto get) {
    out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (int k = 0; k < n; ++k) out << fmt(get(k)) << '\n';
  };
  scalar("H", [&](int k) { return mesh.H(mesh.leaves[k]); });
  scalar("h", [&](int k) { return mesh.h(mesh.leaves[k]); });
  scalar("h_over_eps", [&](int k) { return mesh.h(mesh.leaves[k]) / eps; });
  scalar("d", [&](int k) { return mesh.d(mesh.leaves[k]); });
  scalar("layers", [&](int k) { return double(mesh.leaves[k].p.layers); });
  scalar("level", [&](int k) { return double(mesh.leaves[k].level); });
  for (const auto& [name, v] : cell_data) {
    if (static_cast<int>(v.size()) != n) throw std::invalid_argument("vtk: cell data size mismatch");
    scalar(name, [&](int k) { return v[k]; });
  }
}

}  // namespace msgoal
