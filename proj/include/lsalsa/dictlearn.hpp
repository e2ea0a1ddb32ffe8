#pragma once

#include "lsalsa/core.hpp"
#include "lsalsa/training.hpp"

namespace lsalsa {

struct DictLearnOptions {
  TrainConfig train;
  double alpha = 0.1;
  /// FISTA iterations used to code each batch (no warm start).
  int fista_iters = 200;
};

struct DictLearnResult {
  Dictionary dictionary;
  /// Mean lasso cost over all signals: [0] for the initial dictionary, [e] after epoch e.
  std::vector<double> cost_history;
};

/// Columns drawn i.i.d. standard normal (seeded) and normalized.
Dictionary random_dictionary(std::size_t rows, std::size_t cols, std::uint64_t seed);

/// -(1/P) sum_p (y_p - A x_p) x_p^T, codes held fixed.
Matrix dict_gradient(const Matrix& atoms, std::span<const Vector> signals, std::span<const Vector> codes);

/// Mean lasso cost of `signals` under `dict` with FISTA codes.
double mean_coding_cost(std::span<const Vector> signals, const Dictionary& dict, double alpha, int fista_iters);

/// Alternates FISTA coding of each mini-batch with an SGD step on A followed by
/// column renormalization.
DictLearnResult learn_dictionary(std::span<const Vector> signals, const Dictionary& init,
                                 const DictLearnOptions& options);

/// Learns A_i on each component's own (unmixed) data and concatenates them.
ConcatDictionary learn_component_dictionaries(std::span<const std::vector<Vector>> datasets,
                                              std::span<const Dictionary> inits, const DictLearnOptions& options);
/// Same, with random initial dictionaries of the given sizes (seed = options.train.seed + i).
ConcatDictionary learn_component_dictionaries(std::span<const std::vector<Vector>> datasets,
                                              std::span<const std::size_t> atoms, const DictLearnOptions& options);

}  // namespace lsalsa
