#include "lsalsa/lsam.hpp"

#include <array>
#include <bit>
#include <cstdio>
#include <fstream>
#include <istream>
#include <iterator>
#include <limits>
#include <ostream>
#include <sstream>

namespace lsalsa {
namespace {

template <typename U>
void put_le(std::ostream& out, U value) {
  std::array<char, sizeof(U)> bytes{};
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<char>((value >> (8 * i)) & 0xffU);
  out.write(bytes.data(), bytes.size());
}

template <typename U>
U get_le(std::istream& in, const char* field) {
  std::array<unsigned char, sizeof(U)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  require(in.gcount() == static_cast<std::streamsize>(bytes.size()), ErrorCode::FormatError,
          std::string("truncated LSAM header at ") + field);
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(bytes[i]) << (8 * i);
  return value;
}

}  // namespace

void write_lsam(std::ostream& out, const Matrix& m) {
  out.write("LSAM", 4);
  put_le<std::uint32_t>(out, kLsamVersion);
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(m(r, c)));
  require(static_cast<bool>(out), ErrorCode::IoError, "failed writing LSAM payload");
}

Matrix read_lsam(std::istream& in) {
  std::array<char, 4> magic{};
  in.read(magic.data(), 4);
  require(in.gcount() == 4 && std::string_view(magic.data(), 4) == "LSAM", ErrorCode::FormatError,
          "bad LSAM magic");
  const auto version = get_le<std::uint32_t>(in, "version");
  require(version == kLsamVersion, ErrorCode::FormatError,
          "unsupported LSAM version " + std::to_string(version));
  const auto rows = get_le<std::uint64_t>(in, "rows");
  const auto cols = get_le<std::uint64_t>(in, "cols");
  constexpr auto kMaxEntries = std::uint64_t{1} << 40;
  require(cols == 0 || rows <= kMaxEntries / cols, ErrorCode::FormatError, "LSAM shape too large");
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  std::vector<unsigned char> payload(rows * cols * 8);
  in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  require(in.gcount() == static_cast<std::streamsize>(payload.size()), ErrorCode::FormatError,
          "truncated LSAM payload");
  std::size_t pos = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      std::uint64_t bits = 0;
      for (std::size_t i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(payload[pos + i]) << (8 * i);
      pos += 8;
      m(r, c) = std::bit_cast<double>(bits);
    }
  }
  return m;
}

void write_lsam(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.is_open(), ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  write_lsam(out, m);
}

Matrix read_lsam(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.is_open(), ErrorCode::IoError, "cannot open " + path.string());
  return read_lsam(in);
}

Matrix rows_from(std::span<const Vector> vectors) {
  if (vectors.empty()) return Matrix(0, 0);
  Matrix m(static_cast<Eigen::Index>(vectors.size()), vectors.front().size());
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    require(vectors[i].size() == m.cols(), ErrorCode::ShapeMismatch, "ragged vector set");
    m.row(static_cast<Eigen::Index>(i)) = vectors[i].transpose();
  }
  return m;
}

std::vector<Vector> rows_of(const Matrix& m) {
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) out.emplace_back(m.row(r).transpose());
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex_digest(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.is_open(), ErrorCode::IoError, "cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return hex_digest(fnv1a64(bytes));
}

}  // namespace lsalsa
