#ifndef PNP_IO_HPP
#define PNP_IO_HPP

#include "pnp/mesh.hpp"
#include "pnp/sparse.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <variant>
#include <vector>

namespace pnp {

class IoError : public Error {
public:
  using Error::Error;
};

/// Shortest decimal string that parses back to the same double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  auto res = std::to_chars(buf, buf + 16, v, 16);
  std::string s(buf, res.ptr);
  return std::string(16 - s.size(), '0') + s;
}

/// Minimal CSV table; cells are strings, integers or doubles.
class CsvTable {
public:
  using Cell = std::variant<std::string, long long, double>;

  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {
    if (header_.empty()) throw ConfigError("CSV header must not be empty");
  }

  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::vector<Cell>>& rows() const { return rows_; }

  void add_row(std::vector<Cell> row) {
    if (row.size() != header_.size())
      throw DimensionError("CSV row has " + std::to_string(row.size()) + " cells, header has " +
                           std::to_string(header_.size()));
    rows_.push_back(std::move(row));
  }

  /// Body plus the trailing "# config-hash <hex>" line.
  std::string str(std::string_view config_text) const {
    std::ostringstream os;
    write_line(os, header_);
    for (const auto& r : rows_) {
      std::vector<std::string> cells;
      cells.reserve(r.size());
      for (const auto& c : r) cells.push_back(to_text(c));
      write_line(os, cells);
    }
    os << "# config-hash " << hex64(fnv1a(config_text)) << '\n';
    return os.str();
  }

  static std::string to_text(const Cell& c) {
    if (const auto* s = std::get_if<std::string>(&c)) return *s;
    if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
    return format_double(std::get<double>(c));
  }

private:
  static void write_line(std::ostream& os, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
    os << '\n';
  }

  std::vector<std::string> header_;
  std::vector<std::vector<Cell>> rows_;
};

inline void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// "nodes N tets M", node coordinates, then zero-based tet connectivity.
inline std::string mesh_text(const TetMesh& mesh) {
  std::ostringstream os;
  os << "nodes " << mesh.num_nodes() << " tets " << mesh.num_tets() << '\n';
  for (const auto& x : mesh.nodes())
    os << format_double(x[0]) << ' ' << format_double(x[1]) << ' ' << format_double(x[2]) << '\n';
  for (const auto& t : mesh.tets()) os << t[0] << ' ' << t[1] << ' ' << t[2] << ' ' << t[3] << '\n';
  return os.str();
}

inline TetMesh parse_mesh_text(std::string_view text) {
  std::istringstream is{std::string(text)};
  std::string w1, w2;
  std::size_t nn = 0, nt = 0;
  if (!(is >> w1 >> nn >> w2 >> nt) || w1 != "nodes" || w2 != "tets") throw IoError("bad mesh header");
  std::vector<Vec3> nodes(nn);
  for (auto& x : nodes)
    if (!(is >> x[0] >> x[1] >> x[2])) throw IoError("truncated node block");
  std::vector<Tet> tets(nt);
  for (auto& t : tets)
    if (!(is >> t[0] >> t[1] >> t[2] >> t[3])) throw IoError("truncated tet block");
  return TetMesh(std::move(nodes), std::move(tets));
}

/// Coordinate format, one "row col value" line per stored entry.
inline std::string matrix_text(const CsrMatrix& a) {
  std::ostringstream os;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t p = a.row_begin(i); p < a.row_end(i); ++p)
      os << i << ' ' << a.col(p) << ' ' << format_double(a.value(p)) << '\n';
  return os.str();
}

}  // namespace pnp

#endif  // PNP_IO_HPP
