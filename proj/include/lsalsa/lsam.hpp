#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string_view>

#include "lsalsa/core.hpp"

namespace lsalsa {

// LSAM v1 matrix container:
//   bytes  0..3   ASCII "LSAM"
//   bytes  4..7   u32 version (= 1), little-endian
//   bytes  8..15  u64 rows, little-endian
//   bytes 16..23  u64 cols, little-endian
//   payload       rows * cols f64, row-major, little-endian
inline constexpr std::uint32_t kLsamVersion = 1;

void write_lsam(std::ostream& out, const Matrix& m);
Matrix read_lsam(std::istream& in);

void write_lsam(const std::filesystem::path& path, const Matrix& m);
Matrix read_lsam(const std::filesystem::path& path);

/// Stack vectors as the rows of a matrix (sample-major layout used on disk).
Matrix rows_from(std::span<const Vector> vectors);
std::vector<Vector> rows_of(const Matrix& m);

/// 64-bit FNV-1a; used for config and file digests in manifests.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex_digest(std::uint64_t h);
std::string file_digest(const std::filesystem::path& path);

}  // namespace lsalsa
