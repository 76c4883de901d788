#include "wnlab/matrix_io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "wnlab/errors.hpp"

namespace wnlab::io {

namespace fs = std::filesystem;

namespace {

constexpr std::array<char, 4> kMagic = {'W', 'N', 'F', '1'};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_double(std::string_view field, long line) {
  field = trim(field);
  if (field.empty()) throw ParseError("empty CSV field", line);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw ParseError("invalid number '" + std::string(field) + "'", line);
  }
  return value;
}

std::uint32_t load_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void store_u32(unsigned char* p, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<unsigned char>(v >> (8 * i));
}

std::uint64_t to_le(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    std::uint64_t out = 0;
    for (int i = 0; i < 8; ++i) out |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
    return out;
  }
}

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw ParseError("cannot open " + path.string());
  return in;
}

fs::path find_member(const fs::path& dir, const std::string& name) {
  for (const char* ext : {".csv", ".bin"}) {
    fs::path p = dir / (name + ext);
    if (fs::exists(p)) return p;
  }
  return {};
}

}  // namespace

Mat read_csv_matrix(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = t.find(',', start);
      row.push_back(parse_double(t.substr(start, comma - start), lineno));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ParseError("ragged CSV row: expected " + std::to_string(rows.front().size()) +
                           " columns, got " + std::to_string(row.size()),
                       lineno);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("CSV matrix has no rows");
  Mat m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
  return m;
}

Mat read_csv_matrix(const fs::path& path) {
  auto in = open_in(path);
  return read_csv_matrix(in);
}

void write_csv_matrix(std::ostream& out, const Mat& m) {
  std::array<char, 32> buf{};
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), m(i, j),
                                     std::chars_format::general, 17);
      out.write(buf.data(), res.ptr - buf.data());
    }
    out << '\n';
  }
}

Mat read_binary_matrix(std::istream& in) {
  std::array<unsigned char, 12> header{};
  if (!in.read(reinterpret_cast<char*>(header.data()), header.size())) {
    throw ParseError("binary matrix: truncated header");
  }
  if (std::memcmp(header.data(), kMagic.data(), kMagic.size()) != 0) {
    throw ParseError("binary matrix: bad magic (expected WNF1)");
  }
  const std::uint32_t rows = load_u32(header.data() + 4);
  const std::uint32_t cols = load_u32(header.data() + 8);
  Mat m(rows, cols);
  for (std::uint32_t i = 0; i < rows; ++i) {
    for (std::uint32_t j = 0; j < cols; ++j) {
      std::uint64_t bits = 0;
      if (!in.read(reinterpret_cast<char*>(&bits), sizeof bits)) {
        throw ParseError("binary matrix: truncated payload");
      }
      m(i, j) = std::bit_cast<double>(to_le(bits));
    }
  }
  return m;
}

Mat read_binary_matrix(const fs::path& path) {
  auto in = open_in(path, std::ios::in | std::ios::binary);
  return read_binary_matrix(in);
}

void write_binary_matrix(std::ostream& out, const Mat& m) {
  std::array<unsigned char, 12> header{};
  std::memcpy(header.data(), kMagic.data(), kMagic.size());
  store_u32(header.data() + 4, static_cast<std::uint32_t>(m.rows()));
  store_u32(header.data() + 8, static_cast<std::uint32_t>(m.cols()));
  out.write(reinterpret_cast<const char*>(header.data()), header.size());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const std::uint64_t bits = to_le(std::bit_cast<std::uint64_t>(m(i, j)));
      out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
    }
  }
}

Mat read_matrix(const fs::path& path) {
  return path.extension() == ".bin" ? read_binary_matrix(path) : read_csv_matrix(path);
}

void write_matrix(const fs::path& path, const Mat& m) {
  std::ostringstream buf;
  if (path.extension() == ".bin") {
    write_binary_matrix(buf, m);
  } else {
    write_csv_matrix(buf, m);
  }
  write_file_atomic(path, buf.str());
}

Vec read_vector(const fs::path& path) {
  const Mat m = read_matrix(path);
  if (m.cols() == 1) return m.col(0);
  if (m.rows() == 1) return m.row(0).transpose();
  throw ParseError(path.string() + ": expected a vector (one row or one column)");
}

void write_vector(const fs::path& path, const Vec& v) { write_matrix(path, Mat(v)); }

ProblemInstance load_instance(const fs::path& dir) {
  const fs::path a = find_member(dir, "A");
  const fs::path b = find_member(dir, "b");
  if (a.empty() || b.empty()) {
    throw ParseError("instance directory " + dir.string() + " must contain A and b");
  }
  ProblemInstance inst;
  inst.A = read_matrix(a);
  inst.b = read_vector(b);
  if (const fs::path xs = find_member(dir, "x_star"); !xs.empty()) inst.x_star = read_vector(xs);
  if (const fs::path w = find_member(dir, "w"); !w.empty()) inst.w = read_vector(w);
  inst.validate();
  return inst;
}

void save_instance(const fs::path& dir, const ProblemInstance& inst, Format format) {
  fs::create_directories(dir);
  const char* ext = format == Format::Binary ? ".bin" : ".csv";
  write_matrix(dir / (std::string("A") + ext), inst.A);
  write_vector(dir / (std::string("b") + ext), inst.b);
  if (inst.x_star) write_vector(dir / (std::string("x_star") + ext), *inst.x_star);
  if (inst.w) write_vector(dir / (std::string("w") + ext), *inst.w);
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::out | std::ios::binary | std::ios::trunc);
    if (!out) throw ParseError("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw ParseError("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

}  // namespace wnlab::io
