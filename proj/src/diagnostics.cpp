#include "lsalsa/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "json.hpp"

namespace lsalsa {

SplittingInverse::SplittingInverse(const Matrix& splitting) {
  require(splitting.rows() == splitting.cols() && splitting.rows() > 0, ErrorCode::ShapeMismatch,
          "S must be square");
  require(all_finite(splitting), ErrorCode::SingularS, "S has non-finite entries");
  lu_.compute(Eigen::MatrixXd(splitting));
  const double rcond = lu_.rcond();
  condition_ = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
  require(std::isfinite(condition_) && condition_ <= kMaxSplittingCondition, ErrorCode::SingularS,
          "S condition estimate " + std::to_string(condition_) + " exceeds 1e12");
}

double learned_f1(const LsalsaParams& params, const Vector& signal, const Vector& x) {
  require(static_cast<std::size_t>(signal.size()) == params.signal_dim() &&
              static_cast<std::size_t>(x.size()) == params.code_dim(),
          ErrorCode::ShapeMismatch, "signal/code shape does not match the parameters");
  const SplittingInverse s_inv(params.splitting);
  const Vector sx = s_inv.apply(x);
  return 0.5 * x.dot(sx - params.mu * x) - (params.encoder * signal).dot(x) + 0.5 * signal.squaredNorm();
}

namespace {

Deviation residual_with(const SplittingInverse& s_inv, const LsalsaParams& params, const Vector& signal,
                        const Vector& x, const Vector& u, const Vector& d_prev) {
  const Vector filtered = params.encoder * signal;
  const Vector rhs = filtered + params.mu * (u - d_prev);
  const double abs = (s_inv.apply(x) - rhs).lpNorm<Eigen::Infinity>();
  const double scale = filtered.lpNorm<Eigen::Infinity>() +
                       params.mu * (u.lpNorm<Eigen::Infinity>() + d_prev.lpNorm<Eigen::Infinity>());
  return {abs, abs / std::max(scale, 1.0)};
}

void check_tape(const LsalsaParams& params, const LsalsaTape& tape) {
  require(!tape.empty(), ErrorCode::MissingTape, "forward pass was run without a tape");
  require(static_cast<std::size_t>(tape.signals.rows()) == params.signal_dim(), ErrorCode::ShapeMismatch,
          "tape does not belong to these parameters");
}

}  // namespace

Deviation primal_optimality_residual(const LsalsaParams& params, const Vector& signal, const Vector& x,
                                     const Vector& u, const Vector& d_prev) {
  require(static_cast<std::size_t>(signal.size()) == params.signal_dim() &&
              static_cast<std::size_t>(x.size()) == params.code_dim() && u.size() == x.size() &&
              d_prev.size() == x.size(),
          ErrorCode::ShapeMismatch, "probe shapes do not match the parameters");
  return residual_with(SplittingInverse(params.splitting), params, signal, x, u, d_prev);
}

Deviation primal_optimality_residual(const LsalsaParams& params, const LsalsaTape& tape, int layer,
                                     Eigen::Index sample) {
  check_tape(params, tape);
  require(layer >= 1 && layer <= tape.depth(), ErrorCode::InvalidArgument,
          "layer " + std::to_string(layer) + " outside 1.." + std::to_string(tape.depth()));
  require(sample >= 0 && sample < tape.signals.cols(), ErrorCode::InvalidArgument, "sample index out of range");
  return residual_with(SplittingInverse(params.splitting), params, tape.signals.col(sample),
                       tape.x[layer].col(sample), tape.u[layer].col(sample), tape.d[layer - 1].col(sample));
}

double max_primal_residual(const LsalsaParams& params, const LsalsaTape& tape) {
  check_tape(params, tape);
  const SplittingInverse s_inv(params.splitting);
  double worst = 0.0;
  for (int t = 1; t <= tape.depth(); ++t)
    for (Eigen::Index c = 0; c < tape.signals.cols(); ++c)
      worst = std::max(worst, residual_with(s_inv, params, tape.signals.col(c), tape.x[t].col(c),
                                            tape.u[t].col(c), tape.d[t - 1].col(c))
                                  .relative);
  return worst;
}

DescentModifier descent_modifier(const LsalsaParams& params, const ConcatDictionary& dict) {
  require(dict.atoms() == params.code_dim() && dict.signal_dim() == params.signal_dim(), ErrorCode::ShapeMismatch,
          "dictionary does not match the parameters");
  const SplittingInverse s_inv(params.splitting);
  const auto n = static_cast<Eigen::Index>(params.code_dim());
  const Matrix& a = dict.matrix();
  DescentModifier out;
  out.p = s_inv.inverse();
  out.p.noalias() -= a.transpose() * a;
  out.p.diagonal().array() -= params.mu;
  out.frobenius = out.p.norm();
  const Eigen::MatrixXd sym = 0.5 * (out.p + out.p.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
  out.sym_eig_min = eig.eigenvalues()[0];
  out.sym_eig_max = eig.eigenvalues()[n - 1];
  return out;
}

Deviation recursion_oracle(const LsalsaParams& params, const Vector& signal, int depth) {
  require(depth >= 1 && depth <= 6, ErrorCode::InvalidArgument, "recursion oracle supports 1 <= T <= 6");
  require(static_cast<std::size_t>(signal.size()) == params.signal_dim(), ErrorCode::ShapeMismatch,
          "signal length does not match the encoder");
  LsalsaParams p = params;
  p.depth = depth;
  LsalsaTape tape;
  lsalsa_forward(p, signal, &tape);

  const auto n = static_cast<Eigen::Index>(p.code_dim());
  const Vector taus = p.partition.thresholds(p.alphas, p.mu);
  const Matrix k = p.mu * p.splitting;
  const Matrix m = Matrix::Identity(n, n) - k;
  const Matrix c = Matrix::Identity(n, n) - 2.0 * k;
  const Vector filtered = p.encoder * signal;
  const Vector b = p.splitting * filtered;

  // powers[j] = M^j
  std::vector<Matrix> powers{Matrix::Identity(n, n)};
  for (int j = 1; j < depth; ++j) powers.push_back(powers.back() * m);

  auto u = [&](int t) -> Vector { return tape.u[t].col(0); };
  double worst = 0.0;
  double scale = 1.0;
  for (int t = 1; t <= depth; ++t) {
    Vector pre;
    if (t == 1) {
      pre = filtered;
    } else {
      // u(t) from x(t-1) + d(t-1) written in terms of b and u(1..t-1).
      const int s = t - 1;
      Matrix geometric = Matrix::Zero(n, n);
      for (int j = 0; j <= s - 2; ++j) geometric += powers[j];
      Vector history = -u(s);
      for (int j = 1; j <= s - 1; ++j) history -= powers[j] * u(s - j);
      pre = 2.0 * b + c * (geometric * b) + c * history;
    }
    const Vector closed = soft_threshold(pre, taus);
    worst = std::max(worst, (closed - u(t)).lpNorm<Eigen::Infinity>());
    scale = std::max(scale, u(t).lpNorm<Eigen::Infinity>());
  }
  return {worst, worst / scale};
}

DiagnosticsReport run_diagnostics(const LsalsaParams& params, const ConcatDictionary& dict,
                                  std::span<const Vector> signals, std::uint64_t seed) {
  params.validate();
  require(!signals.empty(), ErrorCode::EmptySource, "no signals to diagnose");
  const auto init = lsalsa_init(dict, params.alphas, params.mu, params.depth);
  const auto modifier = descent_modifier(params, dict);

  DiagnosticsReport r;
  r.p_frobenius = modifier.frobenius;
  r.p_sym_eig_min = modifier.sym_eig_min;
  r.p_sym_eig_max = modifier.sym_eig_max;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const int oracle_depth = std::min(params.depth, 6);
  for (const auto& y : signals) {
    LsalsaTape tape;
    lsalsa_forward(params, y, &tape);
    r.theorem1_residual_max = std::max(r.theorem1_residual_max, max_primal_residual(params, tape));

    Vector x(static_cast<Eigen::Index>(init.code_dim()));
    for (auto& v : x) v = normal(rng);
    const double exact = 0.5 * (y - dict.matrix() * x).squaredNorm();
    const double dev = std::abs(learned_f1(init, y, x) - exact) / std::max(exact, 1.0);
    r.f1hat_init_dev = std::max(r.f1hat_init_dev, dev);

    r.recursion_dev = std::max(r.recursion_dev, recursion_oracle(init, y, oracle_depth).relative);
  }
  return r;
}

std::string to_json(const DiagnosticsReport& report) {
  nlohmann::ordered_json j;
  j["theorem1_residual_max"] = report.theorem1_residual_max;
  j["f1hat_init_dev"] = report.f1hat_init_dev;
  j["P_frobenius"] = report.p_frobenius;
  j["P_sym_eig_min"] = report.p_sym_eig_min;
  j["P_sym_eig_max"] = report.p_sym_eig_max;
  j["recursion_dev"] = report.recursion_dev;
  return j.dump(2);
}

}  // namespace lsalsa
