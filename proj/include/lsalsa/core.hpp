#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "lsalsa/error.hpp"

namespace lsalsa {

/// Dense matrices are stored row-major throughout the toolkit.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Block layout of a code vector: D consecutive blocks of lengths N_1..N_D.
class Partition {
 public:
  Partition() = default;
  explicit Partition(std::vector<std::size_t> sizes);

  static Partition single(std::size_t n) { return Partition({n}); }

  std::size_t blocks() const { return sizes_.size(); }
  std::size_t total() const { return offsets_.empty() ? 0 : offsets_.back(); }
  std::size_t size(std::size_t block) const { return sizes_.at(block); }
  std::size_t offset(std::size_t block) const { return offsets_.at(block); }
  const std::vector<std::size_t>& sizes() const { return sizes_; }

  /// Per-coordinate thresholds: coordinate j in block i gets alphas[i] / scale.
  Vector thresholds(std::span<const double> alphas, double scale) const;

  bool operator==(const Partition&) const = default;

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_;  // D + 1 entries, offsets_[0] == 0
};

struct ComponentCode {
  Vector values;
  Partition partition;

  ComponentCode() = default;
  ComponentCode(Vector v, Partition p);
  explicit ComponentCode(Vector v);

  auto block(std::size_t i) { return values.segment(partition.offset(i), partition.size(i)); }
  auto block(std::size_t i) const { return values.segment(partition.offset(i), partition.size(i)); }
  std::size_t size() const { return static_cast<std::size_t>(values.size()); }
};

/// M x N synthesis matrix whose columns are the atoms.
class Dictionary {
 public:
  explicit Dictionary(Matrix atoms, double column_norm_tolerance = 1e-8);

  const Matrix& atoms() const { return atoms_; }
  std::size_t signal_dim() const { return static_cast<std::size_t>(atoms_.rows()); }
  std::size_t size() const { return static_cast<std::size_t>(atoms_.cols()); }
  double column_norm_tolerance() const { return tolerance_; }

  /// True when every column norm is within the tolerance of 1.
  bool is_normalized() const;

 private:
  Matrix atoms_;
  double tolerance_;
};

/// Ordered concatenation [A_1, ..., A_D] of dictionaries sharing the signal dimension.
class ConcatDictionary {
 public:
  explicit ConcatDictionary(std::vector<Dictionary> parts);
  ConcatDictionary(Dictionary single);  // NOLINT(google-explicit-constructor)

  const Matrix& matrix() const { return stacked_; }
  const std::vector<Dictionary>& parts() const { return parts_; }
  const Partition& partition() const { return partition_; }
  std::size_t components() const { return parts_.size(); }
  std::size_t signal_dim() const { return static_cast<std::size_t>(stacked_.rows()); }
  std::size_t atoms() const { return static_cast<std::size_t>(stacked_.cols()); }

 private:
  std::vector<Dictionary> parts_;
  Partition partition_;
  Matrix stacked_;
};

struct Signal {
  Vector data;
  std::optional<int> label;
  std::vector<Vector> component_truth;

  Signal() = default;
  explicit Signal(Vector y) : data(std::move(y)) {}

  /// Throws DimensionMismatch when the truth components do not sum to `data`.
  void validate() const;
};

struct SolverConfig {
  std::vector<double> alphas{0.1};
  double mu = 10.0;
  int max_iters = 100;
  double stop_tol = 1e-6;
  std::optional<double> lipschitz;
  /// Apply the blockwise output soft-threshold to SALSA's final x.
  bool emit_thresholded = true;

  void validate(std::size_t components) const;
};

Dictionary normalize_columns(const Dictionary& dict);

/// S = (mu I + A^T A)^{-1} via Cholesky.
Matrix build_splitting_operator(const Matrix& a, double mu);
Matrix build_splitting_operator(const ConcatDictionary& dict, double mu);

inline double soft_threshold(double z, double tau) {
  if (z > tau) return z - tau;
  if (z < -tau) return z + tau;
  return 0.0;
}
Vector soft_threshold(const Vector& z, double tau);
/// Elementwise soft threshold with a per-coordinate threshold vector.
Vector soft_threshold(const Vector& z, const Vector& taus);

/// Blockwise soft(z_i; alpha_i / mu).
ComponentCode prox_weighted_l1(const ComponentCode& z, std::span<const double> alphas, double mu);

/// 0.5 ||y - A x||^2 + sum_i alpha_i ||x_i||_1
double lasso_cost(const ComponentCode& code, const Signal& signal, const ConcatDictionary& dict,
                  std::span<const double> alphas);
double lasso_cost(const Vector& x, const Vector& y, const Matrix& a, const Partition& partition,
                  std::span<const double> alphas);

double rmse(const Vector& a, const Vector& b);
inline double rmse(const ComponentCode& a, const ComponentCode& b) { return rmse(a.values, b.values); }

double sparsity(const Vector& code, double zero_tol = 1e-12);
inline double sparsity(const ComponentCode& code, double zero_tol = 1e-12) {
  return sparsity(code.values, zero_tol);
}

bool all_finite(const Vector& v);
bool all_finite(const Matrix& m);

}  // namespace lsalsa
