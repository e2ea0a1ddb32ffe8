#pragma once

#include <cstdint>
#include <string>

#include <Eigen/LU>

#include "lsalsa/unrolled.hpp"

namespace lsalsa {

/// Condition estimates above this reject S as singular.
inline constexpr double kMaxSplittingCondition = 1e12;

/// LU factorization of a learned S. Applying S^{-1} solves against it.
class SplittingInverse {
 public:
  /// Throws SingularS when the condition estimate exceeds kMaxSplittingCondition.
  explicit SplittingInverse(const Matrix& splitting);

  Vector apply(const Vector& v) const { return lu_.solve(v); }
  Matrix inverse() const { return lu_.inverse(); }
  double condition_estimate() const { return condition_; }

 private:
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  double condition_ = 0.0;
};

struct Deviation {
  double absolute = 0.0;
  double relative = 0.0;
};

/// 0.5 x^T (S^{-1} - mu I) x - (W_e y)^T x + 0.5 y^T y
double learned_f1(const LsalsaParams& params, const Vector& signal, const Vector& x);

/// || S^{-1} x(t) - W_e y - mu (u(t) - d(t-1)) ||_inf for one sample.
Deviation primal_optimality_residual(const LsalsaParams& params, const Vector& signal, const Vector& x,
                                     const Vector& u, const Vector& d_prev);
/// Same, for layer t (1-based) and column `sample` of a forward tape.
Deviation primal_optimality_residual(const LsalsaParams& params, const LsalsaTape& tape, int layer,
                                     Eigen::Index sample = 0);
/// Worst relative residual over every layer and column of the tape.
double max_primal_residual(const LsalsaParams& params, const LsalsaTape& tape);

struct DescentModifier {
  Matrix p;  // S^{-1} - (mu I + A^T A)
  double sym_eig_min = 0.0;
  double sym_eig_max = 0.0;
  double frobenius = 0.0;
};

DescentModifier descent_modifier(const LsalsaParams& params, const ConcatDictionary& dict);

/// Rebuilds every u(t), t <= T, from the closed-form unrolled recursion fed with
/// the forward pass's earlier u's, and reports the worst deviation (relative to
/// max(1, max_t ||u(t)||_inf)). Requires 1 <= T <= 6.
Deviation recursion_oracle(const LsalsaParams& params, const Vector& signal, int depth);

struct DiagnosticsReport {
  double theorem1_residual_max = 0.0;
  double f1hat_init_dev = 0.0;
  double p_frobenius = 0.0;
  double p_sym_eig_min = 0.0;
  double p_sym_eig_max = 0.0;
  double recursion_dev = 0.0;
};

/// Runs every check over `signals`: the residual and P on `params`, f1hat and
/// the recursion on the initialization for the same dictionary and
/// hyperparameters (random x drawn from `seed`).
DiagnosticsReport run_diagnostics(const LsalsaParams& params, const ConcatDictionary& dict,
                                  std::span<const Vector> signals, std::uint64_t seed);

/// JSON object with keys theorem1_residual_max, f1hat_init_dev, P_frobenius,
/// P_sym_eig_min, P_sym_eig_max, recursion_dev.
std::string to_json(const DiagnosticsReport& report);

}  // namespace lsalsa
