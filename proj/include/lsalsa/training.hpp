#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "lsalsa/encoder.hpp"
#include "lsalsa/unrolled.hpp"

namespace lsalsa {

struct TrainConfig {
  double learning_rate = 1e-3;
  /// Multiplicative learning-rate factor applied after every epoch.
  double lr_decay = 1.0;
  int batch_size = 100;
  int max_epochs = 100;
  double rel_cost_tol = 1e-6;
  std::uint64_t seed = 0;
  /// LISTA only: whether theta is trained.
  bool learn_theta = true;

  void validate() const;
};

/// A training pair: input signal y and its optimal code x*.
struct Example {
  Vector signal;
  Vector target;
};

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double val_rmse = 0.0;  // NaN without a validation set
};

template <typename Params>
struct TrainResult {
  Params params;
  std::vector<EpochRecord> history;
  bool converged = false;
};

struct LsalsaGradients {
  Matrix encoder;
  Matrix splitting;
};

struct ListaGradients {
  Matrix encoder;
  Matrix inhibition;
  Vector thresholds;
};

/// (1 / 2P) sum_p ||x*_p - f_e(y_p)||^2
double prediction_loss(const LsalsaParams& params, std::span<const Example> batch);
double prediction_loss(const ListaParams& params, std::span<const Example> batch);

/// Gradients of the prediction loss, averaged over the tape's columns.
/// `targets` holds one column per sample.
LsalsaGradients lsalsa_backward(const LsalsaParams& params, const LsalsaTape& tape, const Batch& targets);
LsalsaGradients lsalsa_backward(const LsalsaParams& params, const LsalsaTape& tape, const Vector& target);
ListaGradients lista_backward(const ListaParams& params, const ListaTape& tape, const Batch& targets);
ListaGradients lista_backward(const ListaParams& params, const ListaTape& tape, const Vector& target);

/// Mini-batch SGD. The loss history holds the full-training-set loss after each epoch.
TrainResult<LsalsaParams> train(const LsalsaParams& init, std::span<const Example> data,
                                const TrainConfig& config, std::span<const Example> validation = {});
TrainResult<ListaParams> train(const ListaParams& init, std::span<const Example> data,
                               const TrainConfig& config, std::span<const Example> validation = {});

/// Mean per-sample code RMSE of an encoder against the targets.
double mean_rmse(const Encoder& encoder, std::span<const Example> data);

/// CSV `epoch,lr,train_loss,val_rmse`.
void write_loss_history_csv(std::ostream& out, const std::vector<EpochRecord>& history);

struct GridSpec {
  std::vector<std::vector<double>> alphas;
  std::vector<double> mu{10.0};
  std::vector<int> batch_size{100};
  std::vector<double> learning_rate{1e-3};
  std::vector<double> lr_decay{1.0};
  int epochs = 10;
  int depth = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct GridCell {
  std::size_t index = 0;
  std::vector<double> alphas;
  double mu = 0.0;
  int batch_size = 0;
  double learning_rate = 0.0;
  double lr_decay = 1.0;
  double val_rmse = 0.0;
  bool ok = false;
  std::string error;
};

struct GridResult {
  std::optional<GridCell> best;
  std::vector<GridCell> leaderboard;  // ranked: valid cells by val_rmse, then failures
  std::size_t valid_cells() const;
};

/// Exhaustive search. Learned methods are trained for `grid.epochs` per cell
/// (seed = grid.seed ^ cell index); iterative methods run `grid.depth`
/// iterations with stop_tol = 0. Ties break toward smaller alphas, then smaller
/// learning rate. Per-cell failures are recorded, not thrown.
GridResult grid_search(std::span<const Example> train_set, std::span<const Example> val_set,
                       const ConcatDictionary& dict, const GridSpec& grid, Method method);

void write_leaderboard_csv(std::ostream& out, const GridResult& result);

}  // namespace lsalsa
