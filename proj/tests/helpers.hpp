#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "doctest.h"
#include "lsalsa/core.hpp"

namespace testing {

inline lsalsa::Matrix gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  lsalsa::Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
  return m;
}

inline lsalsa::Vector gaussian_vec(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  lsalsa::Vector v(n);
  for (auto& x : v) x = normal(rng);
  return v;
}

inline lsalsa::Dictionary unit_dict(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  return lsalsa::normalize_columns(lsalsa::Dictionary(gaussian(rows, cols, rng)));
}

/// D random unit-norm parts with `cols` atoms each.
inline lsalsa::ConcatDictionary concat_dict(Eigen::Index rows, std::vector<Eigen::Index> cols, std::mt19937_64& rng) {
  std::vector<lsalsa::Dictionary> parts;
  for (auto c : cols) parts.push_back(unit_dict(rows, c, rng));
  return lsalsa::ConcatDictionary(std::move(parts));
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("lsalsa_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline lsalsa::ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const lsalsa::Error& e) {
    return e.code();
  }
  FAIL("expected an lsalsa::Error");
  return lsalsa::ErrorCode::InvalidArgument;
}

}  // namespace testing
