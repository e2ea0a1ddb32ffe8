#include "lsalsa/dictlearn.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "lsalsa/solvers.hpp"

namespace lsalsa {

Dictionary random_dictionary(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  require(rows >= 1 && cols >= 1, ErrorCode::ShapeMismatch, "dictionary must be at least 1x1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Matrix a(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i) a(i, j) = normal(rng);
  return normalize_columns(Dictionary(std::move(a)));
}

Matrix dict_gradient(const Matrix& atoms, std::span<const Vector> signals, std::span<const Vector> codes) {
  require(signals.size() == codes.size() && !signals.empty(), ErrorCode::ShapeMismatch,
          "need one code per signal");
  Matrix grad = Matrix::Zero(atoms.rows(), atoms.cols());
  for (std::size_t p = 0; p < signals.size(); ++p) {
    require(signals[p].size() == atoms.rows() && codes[p].size() == atoms.cols(), ErrorCode::ShapeMismatch,
            "signal/code shape does not match the dictionary");
    const Vector residual = signals[p] - atoms * codes[p];
    grad.noalias() -= residual * codes[p].transpose();
  }
  return grad / static_cast<double>(signals.size());
}

namespace {

SolverConfig coding_config(double alpha, int fista_iters, double lipschitz) {
  SolverConfig c;
  c.alphas = {alpha};
  c.max_iters = fista_iters;
  c.stop_tol = 0.0;
  c.lipschitz = lipschitz;
  return c;
}

}  // namespace

double mean_coding_cost(std::span<const Vector> signals, const Dictionary& dict, double alpha, int fista_iters) {
  require(!signals.empty(), ErrorCode::EmptySource, "no signals to code");
  const ConcatDictionary cd(dict);
  const auto cfg = coding_config(alpha, fista_iters, estimate_lipschitz(dict.atoms()));
  const TraceOptions quiet{.record = false};
  double total = 0.0;
  for (const auto& y : signals) {
    const auto code = fista(Signal(y), cd, cfg, quiet).code;
    total += lasso_cost(code.values, y, dict.atoms(), cd.partition(), cfg.alphas);
  }
  return total / static_cast<double>(signals.size());
}

DictLearnResult learn_dictionary(std::span<const Vector> signals, const Dictionary& init,
                                 const DictLearnOptions& options) {
  auto checked = options.train;
  checked.max_epochs = std::max(checked.max_epochs, 1);
  checked.validate();
  require(options.train.max_epochs >= 0, ErrorCode::InvalidArgument, "max_epochs must be >= 0");
  require(!signals.empty(), ErrorCode::EmptySource, "no training signals");
  require(options.alpha >= 0.0, ErrorCode::InvalidArgument, "alpha must be >= 0");
  require(options.fista_iters >= 1, ErrorCode::InvalidArgument, "fista_iters must be >= 1");
  for (const auto& y : signals)
    require(static_cast<std::size_t>(y.size()) == init.signal_dim(), ErrorCode::ShapeMismatch,
            "signal length does not match dictionary rows");

  Dictionary dict = init;
  DictLearnResult result{dict, {}};
  result.cost_history.push_back(mean_coding_cost(signals, dict, options.alpha, options.fista_iters));

  std::mt19937_64 rng(options.train.seed);
  std::vector<std::size_t> order(signals.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto bs = static_cast<std::size_t>(options.train.batch_size);
  const TraceOptions quiet{.record = false};
  double lr = options.train.learning_rate;

  std::vector<Vector> batch_signals, batch_codes;
  for (int epoch = 1; epoch <= options.train.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const auto end = std::min(order.size(), start + bs);
      const ConcatDictionary cd(dict);
      const auto cfg = coding_config(options.alpha, options.fista_iters, estimate_lipschitz(dict.atoms()));
      batch_signals.clear();
      batch_codes.clear();
      for (auto i = start; i < end; ++i) {
        batch_signals.push_back(signals[order[i]]);
        batch_codes.push_back(fista(Signal(signals[order[i]]), cd, cfg, quiet).code.values);
      }
      Matrix next = dict.atoms() - lr * dict_gradient(dict.atoms(), batch_signals, batch_codes);
      dict = normalize_columns(Dictionary(std::move(next), dict.column_norm_tolerance()));
    }
    result.cost_history.push_back(mean_coding_cost(signals, dict, options.alpha, options.fista_iters));
    lr *= options.train.lr_decay;
  }
  result.dictionary = std::move(dict);
  return result;
}

ConcatDictionary learn_component_dictionaries(std::span<const std::vector<Vector>> datasets,
                                              std::span<const Dictionary> inits, const DictLearnOptions& options) {
  require(!datasets.empty() && datasets.size() == inits.size(), ErrorCode::ShapeMismatch,
          "need one initial dictionary per component dataset");
  std::size_t m = 0;
  for (const auto& ds : datasets) {
    require(!ds.empty(), ErrorCode::EmptySource, "component dataset is empty");
    if (m == 0) m = static_cast<std::size_t>(ds.front().size());
    for (const auto& y : ds)
      require(static_cast<std::size_t>(y.size()) == m, ErrorCode::ShapeMismatch,
              "component datasets disagree on signal dimension");
  }
  std::vector<Dictionary> parts;
  for (std::size_t i = 0; i < datasets.size(); ++i)
    parts.push_back(learn_dictionary(datasets[i], inits[i], options).dictionary);
  return ConcatDictionary(std::move(parts));
}

ConcatDictionary learn_component_dictionaries(std::span<const std::vector<Vector>> datasets,
                                              std::span<const std::size_t> atoms, const DictLearnOptions& options) {
  require(!datasets.empty() && datasets.size() == atoms.size(), ErrorCode::ShapeMismatch,
          "need one atom count per component dataset");
  std::vector<Dictionary> inits;
  for (std::size_t i = 0; i < datasets.size(); ++i) {
    require(!datasets[i].empty(), ErrorCode::EmptySource, "component dataset is empty");
    inits.push_back(random_dictionary(static_cast<std::size_t>(datasets[i].front().size()), atoms[i],
                                      options.train.seed + i));
  }
  return learn_component_dictionaries(datasets, inits, options);
}

}  // namespace lsalsa
