#pragma once

#include <iosfwd>
#include <optional>

#include "lsalsa/core.hpp"

namespace lsalsa {

struct TraceRecord {
  int iter = 0;
  double cost = 0.0;
  double rmse = 0.0;  // NaN when no reference code was supplied
  double elapsed_s = 0.0;
  double sparsity = 0.0;
};

struct SolverTrace {
  std::vector<TraceRecord> records;
  ComponentCode code;
  /// SALSA only: the final split variable u (exactly sparse); empty otherwise.
  Vector split;
  int iterations_run = 0;
  bool converged = false;
};

struct TraceOptions {
  /// Record per-iteration cost/rmse/sparsity. Off for timed runs.
  bool record = true;
  const Vector* reference = nullptr;
};

/// Largest eigenvalue of A^T A by power iteration (50 iterations, 1e-6 relative
/// tolerance), inflated by 1.01 so 1/L is a safe step.
double estimate_lipschitz(const Matrix& a);

SolverTrace ista(const Signal& signal, const ConcatDictionary& dict, const SolverConfig& config,
                 const TraceOptions& options = {});

/// Beck-Teboulle FISTA, no restart.
SolverTrace fista(const Signal& signal, const ConcatDictionary& dict, const SolverConfig& config,
                  const TraceOptions& options = {});

/// SALSA (ADMM with x = u splitting). `splitting` must be (mu I + A^T A)^{-1} for
/// config.mu when given; otherwise it is built here.
SolverTrace salsa(const Signal& signal, const ConcatDictionary& dict, const SolverConfig& config,
                  const Matrix* splitting = nullptr, const TraceOptions& options = {});
SolverTrace salsa(const Signal& signal, const Dictionary& dict, const SolverConfig& config,
                  const Matrix* splitting = nullptr, const TraceOptions& options = {});

/// CSV with header `iter,cost,rmse,sparsity,elapsed_s`.
void write_trace_csv(std::ostream& out, const SolverTrace& trace);

}  // namespace lsalsa
