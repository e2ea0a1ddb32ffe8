#include "lsalsa/solvers.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>

namespace lsalsa {
namespace {

using Clock = std::chrono::steady_clock;

double relative_change(const Vector& next, const Vector& prev) {
  return (next - prev).norm() / std::max(next.norm(), 1e-12);
}

class Recorder {
 public:
  Recorder(const TraceOptions& options, const Signal& signal, const ConcatDictionary& dict,
           const SolverConfig& config)
      : options_(options), signal_(signal), dict_(dict), config_(config), start_(Clock::now()) {}

  void record(SolverTrace& trace, int iter, const Vector& code) const {
    if (!options_.record) return;
    TraceRecord r;
    r.iter = iter;
    r.cost = lasso_cost(code, signal_.data, dict_.matrix(), dict_.partition(), config_.alphas);
    r.rmse = options_.reference ? rmse(code, *options_.reference) : std::numeric_limits<double>::quiet_NaN();
    r.sparsity = sparsity(code);
    r.elapsed_s = std::chrono::duration<double>(Clock::now() - start_).count();
    trace.records.push_back(r);
  }

 private:
  const TraceOptions& options_;
  const Signal& signal_;
  const ConcatDictionary& dict_;
  const SolverConfig& config_;
  Clock::time_point start_;
};

void check_inputs(const Signal& signal, const ConcatDictionary& dict, const SolverConfig& config,
                  const TraceOptions& options) {
  config.validate(dict.components());
  require(static_cast<std::size_t>(signal.data.size()) == dict.signal_dim(), ErrorCode::DimensionMismatch,
          "signal length does not match dictionary rows");
  if (options.reference)
    require(static_cast<std::size_t>(options.reference->size()) == dict.atoms(), ErrorCode::DimensionMismatch,
            "reference code length");
}

void check_finite(const Vector& x, int iter) {
  require(x.allFinite(), ErrorCode::NonFiniteIterate,
          "iterate diverged at iteration " + std::to_string(iter) + " (step size too large?)");
}

}  // namespace

double estimate_lipschitz(const Matrix& a) {
  const auto n = a.cols();
  Vector v(n);
  for (Eigen::Index j = 0; j < n; ++j) v[j] = 1.0 + 0.5 * std::sin(static_cast<double>(j) + 1.0);
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < 50; ++it) {
    Vector w = a.transpose() * (a * v);
    const double next = v.dot(w);
    const double wn = w.norm();
    if (wn == 0.0) return 1.0;  // A == 0: any positive L is valid
    v = w / wn;
    const bool done = std::abs(next - lambda) <= 1e-6 * std::abs(next);
    lambda = next;
    if (done) break;
  }
  // The Rayleigh quotient of the final unit vector is the tightest lower bound.
  lambda = std::max(lambda, (a * v).squaredNorm());
  return 1.01 * lambda;
}

SolverTrace ista(const Signal& signal, const ConcatDictionary& dict, const SolverConfig& config,
                 const TraceOptions& options) {
  check_inputs(signal, dict, config, options);
  const Matrix& a = dict.matrix();
  const double lip = config.lipschitz ? *config.lipschitz : estimate_lipschitz(a);
  const Vector taus = dict.partition().thresholds(config.alphas, lip);
  const Vector& y = signal.data;

  Recorder rec(options, signal, dict, config);
  SolverTrace trace;
  Vector x = Vector::Zero(static_cast<Eigen::Index>(dict.atoms()));
  for (int k = 1; k <= config.max_iters; ++k) {
    Vector next = soft_threshold(x - a.transpose() * (a * x - y) / lip, taus);
    check_finite(next, k);
    const double change = relative_change(next, x);
    x = std::move(next);
    trace.iterations_run = k;
    rec.record(trace, k, x);
    if (change < config.stop_tol) {
      trace.converged = true;
      break;
    }
  }
  trace.code = ComponentCode(std::move(x), dict.partition());
  return trace;
}

SolverTrace fista(const Signal& signal, const ConcatDictionary& dict, const SolverConfig& config,
                  const TraceOptions& options) {
  check_inputs(signal, dict, config, options);
  const Matrix& a = dict.matrix();
  const double lip = config.lipschitz ? *config.lipschitz : estimate_lipschitz(a);
  const Vector taus = dict.partition().thresholds(config.alphas, lip);
  const Vector& y = signal.data;

  Recorder rec(options, signal, dict, config);
  SolverTrace trace;
  Vector x = Vector::Zero(static_cast<Eigen::Index>(dict.atoms()));
  Vector z = x;
  double t = 1.0;
  for (int k = 1; k <= config.max_iters; ++k) {
    Vector next = soft_threshold(z - a.transpose() * (a * z - y) / lip, taus);
    check_finite(next, k);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    z = next + ((t - 1.0) / t_next) * (next - x);
    const double change = relative_change(next, x);
    x = std::move(next);
    t = t_next;
    trace.iterations_run = k;
    rec.record(trace, k, x);
    if (change < config.stop_tol) {
      trace.converged = true;
      break;
    }
  }
  trace.code = ComponentCode(std::move(x), dict.partition());
  return trace;
}

SolverTrace salsa(const Signal& signal, const ConcatDictionary& dict, const SolverConfig& config,
                  const Matrix* splitting, const TraceOptions& options) {
  check_inputs(signal, dict, config, options);
  const Matrix& a = dict.matrix();
  Matrix built;
  if (!splitting) {
    built = build_splitting_operator(a, config.mu);
    splitting = &built;
  }
  const auto n = static_cast<Eigen::Index>(dict.atoms());
  require(splitting->rows() == n && splitting->cols() == n, ErrorCode::DimensionMismatch,
          "splitting operator must be N x N");
  const Matrix& s = *splitting;
  const double mu = config.mu;
  const Vector taus = dict.partition().thresholds(config.alphas, mu);
  const Vector aty = a.transpose() * signal.data;

  Recorder rec(options, signal, dict, config);
  SolverTrace trace;
  Vector x = aty;
  Vector d = Vector::Zero(n);
  Vector u;
  for (int k = 1; k <= config.max_iters; ++k) {
    u = soft_threshold(x + d, taus);
    Vector next = s * (aty + mu * (u - d));
    d = d - u + next;
    check_finite(next, k);
    const double change = relative_change(next, x);
    x = std::move(next);
    trace.iterations_run = k;
    if (options.record) rec.record(trace, k, config.emit_thresholded ? soft_threshold(x, taus) : x);
    if (change < config.stop_tol) {
      trace.converged = true;
      break;
    }
  }
  if (config.emit_thresholded) x = soft_threshold(x, taus);
  trace.code = ComponentCode(std::move(x), dict.partition());
  trace.split = std::move(u);
  return trace;
}

SolverTrace salsa(const Signal& signal, const Dictionary& dict, const SolverConfig& config,
                  const Matrix* splitting, const TraceOptions& options) {
  return salsa(signal, ConcatDictionary(dict), config, splitting, options);
}

void write_trace_csv(std::ostream& out, const SolverTrace& trace) {
  out << "iter,cost,rmse,sparsity,elapsed_s\n";
  out.precision(17);
  for (const auto& r : trace.records)
    out << r.iter << ',' << r.cost << ',' << r.rmse << ',' << r.sparsity << ',' << r.elapsed_s << '\n';
}

}  // namespace lsalsa
