#pragma once

#include <functional>
#include <random>

#include "lsalsa/training.hpp"
#include "helpers.hpp"

namespace testing {

/// Concatenated activation patterns of every thresholding stage.
inline std::vector<bool> pattern(const lsalsa::LsalsaParams& p, const lsalsa::Batch& y) {
  lsalsa::LsalsaTape tape;
  lsalsa::lsalsa_forward(p, y, &tape);
  const lsalsa::Vector taus = p.partition.thresholds(p.alphas, p.mu);
  std::vector<bool> out;
  auto push = [&](const lsalsa::Batch& z) {
    for (Eigen::Index c = 0; c < z.cols(); ++c)
      for (Eigen::Index r = 0; r < z.rows(); ++r) out.push_back(std::abs(z(r, c)) > taus[r]);
  };
  for (int t = 1; t <= p.depth; ++t) push(tape.x[t - 1] + tape.d[t - 1]);
  push(tape.x[p.depth]);
  return out;
}

inline std::vector<bool> pattern(const lsalsa::ListaParams& p, const lsalsa::Batch& y) {
  lsalsa::ListaTape tape;
  lsalsa::lista_forward(p, y, &tape);
  std::vector<bool> out;
  for (int t = 1; t <= p.depth; ++t)
    for (Eigen::Index c = 0; c < tape.pre[t].cols(); ++c)
      for (Eigen::Index r = 0; r < tape.pre[t].rows(); ++r)
        out.push_back(std::abs(tape.pre[t](r, c)) > p.thresholds[r]);
  return out;
}

inline lsalsa::Batch signal_batch(const std::vector<lsalsa::Example>& data) {
  lsalsa::Batch y(data.front().signal.size(), static_cast<Eigen::Index>(data.size()));
  for (std::size_t i = 0; i < data.size(); ++i) y.col(static_cast<Eigen::Index>(i)) = data[i].signal;
  return y;
}

inline lsalsa::Batch target_batch(const std::vector<lsalsa::Example>& data) {
  lsalsa::Batch x(data.front().target.size(), static_cast<Eigen::Index>(data.size()));
  for (std::size_t i = 0; i < data.size(); ++i) x.col(static_cast<Eigen::Index>(i)) = data[i].target;
  return x;
}

struct ProbeStats {
  int accepted = 0;
  int skipped = 0;
  double worst = 0.0;
};

/// Central differences on random entries of `entry(params)` until `want` probes
/// land away from every kink (activation patterns at +-h equal the base pattern).
template <typename Params>
ProbeStats probe_gradient(const Params& base, const std::vector<lsalsa::Example>& data,
                          const std::function<double&(Params&, Eigen::Index)>& entry, Eigen::Index size,
                          const std::function<double(Eigen::Index)>& analytic, int want, std::mt19937_64& rng,
                          double h = 1e-6) {
  const lsalsa::Batch y = signal_batch(data);
  const auto ref = pattern(base, y);
  std::uniform_int_distribution<Eigen::Index> pick(0, size - 1);
  ProbeStats stats;
  for (int tries = 0; stats.accepted < want && tries < 50 * want; ++tries) {
    const Eigen::Index k = pick(rng);
    Params plus = base, minus = base;
    entry(plus, k) += h;
    entry(minus, k) -= h;
    if (pattern(plus, y) != ref || pattern(minus, y) != ref) {
      ++stats.skipped;
      continue;
    }
    const double fd = (lsalsa::prediction_loss(plus, data) - lsalsa::prediction_loss(minus, data)) / (2.0 * h);
    const double g = analytic(k);
    const double err = std::abs(fd - g) / std::max({std::abs(fd), std::abs(g), 1e-6});
    stats.worst = std::max(stats.worst, err);
    ++stats.accepted;
  }
  return stats;
}

inline std::vector<lsalsa::Example> random_examples(Eigen::Index m, Eigen::Index n, int count, std::mt19937_64& rng) {
  std::vector<lsalsa::Example> out;
  for (int i = 0; i < count; ++i) out.push_back({gaussian_vec(m, rng), 0.3 * gaussian_vec(n, rng)});
  return out;
}

}  // namespace testing
