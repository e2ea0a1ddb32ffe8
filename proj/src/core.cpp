#include "lsalsa/core.hpp"

#include <cmath>
#include <string>

namespace lsalsa {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ZeroColumn: return "ZeroColumn";
    case ErrorCode::FactorizationFailure: return "FactorizationFailure";
    case ErrorCode::PartitionMismatch: return "PartitionMismatch";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFiniteIterate: return "NonFiniteIterate";
    case ErrorCode::NonFiniteActivation: return "NonFiniteActivation";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::MissingTape: return "MissingTape";
    case ErrorCode::DivergedLoss: return "DivergedLoss";
    case ErrorCode::UnknownMethod: return "UnknownMethod";
    case ErrorCode::MissingParameter: return "MissingParameter";
    case ErrorCode::MissingModel: return "MissingModel";
    case ErrorCode::PatchTooLarge: return "PatchTooLarge";
    case ErrorCode::EmptySource: return "EmptySource";
    case ErrorCode::SingularS: return "SingularS";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

bool all_finite(const Vector& v) { return v.allFinite(); }
bool all_finite(const Matrix& m) { return m.allFinite(); }

Partition::Partition(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) {
  require(!sizes_.empty(), ErrorCode::PartitionMismatch, "partition needs at least one block");
  offsets_.reserve(sizes_.size() + 1);
  offsets_.push_back(0);
  for (auto s : sizes_) offsets_.push_back(offsets_.back() + s);
}

Vector Partition::thresholds(std::span<const double> alphas, double scale) const {
  require(alphas.size() == blocks(), ErrorCode::PartitionMismatch,
          "expected " + std::to_string(blocks()) + " alphas, got " + std::to_string(alphas.size()));
  Vector taus(static_cast<Eigen::Index>(total()));
  for (std::size_t i = 0; i < blocks(); ++i)
    taus.segment(offset(i), size(i)).setConstant(alphas[i] / scale);
  return taus;
}

ComponentCode::ComponentCode(Vector v, Partition p) : values(std::move(v)), partition(std::move(p)) {
  require(partition.total() == size(), ErrorCode::PartitionMismatch,
          "partition covers " + std::to_string(partition.total()) + " entries, code has " +
              std::to_string(size()));
  require(values.allFinite(), ErrorCode::InvalidArgument, "code has non-finite entries");
}

ComponentCode::ComponentCode(Vector v)
    : ComponentCode(v, Partition::single(static_cast<std::size_t>(v.size()))) {}

Dictionary::Dictionary(Matrix atoms, double column_norm_tolerance)
    : atoms_(std::move(atoms)), tolerance_(column_norm_tolerance) {
  require(atoms_.rows() >= 1 && atoms_.cols() >= 1, ErrorCode::ShapeMismatch,
          "dictionary must be at least 1x1");
  require(atoms_.allFinite(), ErrorCode::InvalidArgument, "dictionary has non-finite entries");
}

bool Dictionary::is_normalized() const {
  for (Eigen::Index j = 0; j < atoms_.cols(); ++j)
    if (std::abs(atoms_.col(j).norm() - 1.0) > tolerance_) return false;
  return true;
}

ConcatDictionary::ConcatDictionary(std::vector<Dictionary> parts) : parts_(std::move(parts)) {
  require(!parts_.empty(), ErrorCode::ShapeMismatch, "concatenated dictionary needs a part");
  const auto m = parts_.front().signal_dim();
  std::vector<std::size_t> sizes;
  for (const auto& p : parts_) {
    require(p.signal_dim() == m, ErrorCode::ShapeMismatch,
            "dictionary parts disagree on signal dimension");
    sizes.push_back(p.size());
  }
  partition_ = Partition(std::move(sizes));
  stacked_.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(partition_.total()));
  for (std::size_t i = 0; i < parts_.size(); ++i)
    stacked_.middleCols(partition_.offset(i), partition_.size(i)) = parts_[i].atoms();
}

ConcatDictionary::ConcatDictionary(Dictionary single)
    : ConcatDictionary(std::vector<Dictionary>{std::move(single)}) {}

void Signal::validate() const {
  require(data.allFinite(), ErrorCode::InvalidArgument, "signal has non-finite entries");
  if (component_truth.empty()) return;
  Vector sum = Vector::Zero(data.size());
  for (const auto& c : component_truth) {
    require(c.size() == data.size(), ErrorCode::DimensionMismatch, "truth component length");
    sum += c;
  }
  require(((sum - data).array().abs() <= 1e-9).all(), ErrorCode::DimensionMismatch,
          "truth components do not sum to the mixture");
}

void SolverConfig::validate(std::size_t components) const {
  require(alphas.size() == components, ErrorCode::PartitionMismatch,
          "expected " + std::to_string(components) + " alphas, got " + std::to_string(alphas.size()));
  for (double a : alphas) require(a >= 0.0, ErrorCode::InvalidArgument, "alpha must be >= 0");
  require(mu > 0.0, ErrorCode::InvalidArgument, "mu must be > 0");
  require(max_iters >= 1, ErrorCode::InvalidArgument, "max_iters must be >= 1");
  require(stop_tol >= 0.0, ErrorCode::InvalidArgument, "stop_tol must be >= 0");
  if (lipschitz) require(*lipschitz > 0.0, ErrorCode::InvalidArgument, "lipschitz must be > 0");
}

Dictionary normalize_columns(const Dictionary& dict) {
  Matrix a = dict.atoms();
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    const double n = a.col(j).norm();
    require(n >= 1e-12, ErrorCode::ZeroColumn, "column " + std::to_string(j) + " has zero norm");
    a.col(j) /= n;
  }
  return Dictionary(std::move(a), dict.column_norm_tolerance());
}

Matrix build_splitting_operator(const Matrix& a, double mu) {
  require(mu > 0.0 && std::isfinite(mu), ErrorCode::FactorizationFailure,
          "mu must be positive and finite");
  require(a.allFinite(), ErrorCode::FactorizationFailure, "dictionary has non-finite entries");
  const auto n = a.cols();
  Eigen::MatrixXd hessian = a.transpose() * a;
  hessian.diagonal().array() += mu;
  Eigen::LLT<Eigen::MatrixXd> llt(hessian);
  require(llt.info() == Eigen::Success, ErrorCode::FactorizationFailure,
          "mu I + A^T A is not positive definite");
  Matrix s = llt.solve(Eigen::MatrixXd::Identity(n, n));
  require(s.allFinite(), ErrorCode::FactorizationFailure, "splitting operator is not finite");
  Matrix sym = 0.5 * (s + s.transpose());
  return sym;
}

Matrix build_splitting_operator(const ConcatDictionary& dict, double mu) {
  return build_splitting_operator(dict.matrix(), mu);
}

Vector soft_threshold(const Vector& z, double tau) {
  require(tau >= 0.0, ErrorCode::InvalidArgument, "threshold must be >= 0");
  return z.unaryExpr([tau](double v) { return soft_threshold(v, tau); });
}

Vector soft_threshold(const Vector& z, const Vector& taus) {
  require(z.size() == taus.size(), ErrorCode::DimensionMismatch, "threshold vector length");
  Vector out(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) out[i] = soft_threshold(z[i], taus[i]);
  return out;
}

ComponentCode prox_weighted_l1(const ComponentCode& z, std::span<const double> alphas, double mu) {
  require(mu > 0.0, ErrorCode::InvalidArgument, "mu must be > 0");
  for (double a : alphas) require(a >= 0.0, ErrorCode::InvalidArgument, "alpha must be >= 0");
  return ComponentCode(soft_threshold(z.values, z.partition.thresholds(alphas, mu)), z.partition);
}

double lasso_cost(const Vector& x, const Vector& y, const Matrix& a, const Partition& partition,
                  std::span<const double> alphas) {
  require(a.rows() == y.size() && a.cols() == x.size() &&
              partition.total() == static_cast<std::size_t>(x.size()),
          ErrorCode::DimensionMismatch, "lasso_cost operand shapes");
  require(alphas.size() == partition.blocks(), ErrorCode::PartitionMismatch, "alpha count");
  double cost = 0.5 * (y - a * x).squaredNorm();
  for (std::size_t i = 0; i < partition.blocks(); ++i)
    cost += alphas[i] * x.segment(partition.offset(i), partition.size(i)).lpNorm<1>();
  return cost;
}

double lasso_cost(const ComponentCode& code, const Signal& signal, const ConcatDictionary& dict,
                  std::span<const double> alphas) {
  require(code.partition == dict.partition(), ErrorCode::DimensionMismatch,
          "code partition does not match dictionary");
  return lasso_cost(code.values, signal.data, dict.matrix(), dict.partition(), alphas);
}

double rmse(const Vector& a, const Vector& b) {
  require(a.size() == b.size(), ErrorCode::DimensionMismatch, "rmse operands differ in length");
  if (a.size() == 0) return 0.0;
  return std::sqrt((a - b).squaredNorm() / static_cast<double>(a.size()));
}

double sparsity(const Vector& code, double zero_tol) {
  if (code.size() == 0) return 1.0;
  const auto zeros = (code.array().abs() <= zero_tol).count();
  return static_cast<double>(zeros) / static_cast<double>(code.size());
}

}  // namespace lsalsa
