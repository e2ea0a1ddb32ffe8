#include "lsalsa/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>

#include "batch_ops.hpp"

namespace lsalsa {

using detail::active_mask;

void TrainConfig::validate() const {
  require(learning_rate >= 0.0 && std::isfinite(learning_rate), ErrorCode::InvalidArgument,
          "learning_rate must be finite and >= 0");
  require(lr_decay > 0.0 && lr_decay <= 1.0, ErrorCode::InvalidArgument, "lr_decay must be in (0, 1]");
  require(batch_size >= 1, ErrorCode::InvalidArgument, "batch_size must be >= 1");
  require(max_epochs >= 1, ErrorCode::InvalidArgument, "max_epochs must be >= 1");
  require(rel_cost_tol >= 0.0, ErrorCode::InvalidArgument, "rel_cost_tol must be >= 0");
}

void GridSpec::validate() const {
  require(!alphas.empty() && !mu.empty() && !batch_size.empty() && !learning_rate.empty() &&
              !lr_decay.empty(),
          ErrorCode::InvalidArgument, "every grid axis needs at least one candidate");
  require(epochs >= 1 && depth >= 1, ErrorCode::InvalidArgument, "grid epochs and depth must be >= 1");
}

std::size_t GridResult::valid_cells() const {
  return static_cast<std::size_t>(
      std::count_if(leaderboard.begin(), leaderboard.end(), [](const GridCell& c) { return c.ok; }));
}

namespace {

constexpr std::size_t kEvalChunk = 256;

void check_examples(std::span<const Example> data, std::size_t m, std::size_t n) {
  for (const auto& ex : data) {
    require(static_cast<std::size_t>(ex.signal.size()) == m, ErrorCode::ShapeMismatch,
            "example signal length " + std::to_string(ex.signal.size()) + " != " + std::to_string(m));
    require(static_cast<std::size_t>(ex.target.size()) == n, ErrorCode::ShapeMismatch,
            "example target length " + std::to_string(ex.target.size()) + " != " + std::to_string(n));
  }
}

template <typename Index>
void gather(std::span<const Example> data, std::span<const Index> idx, Batch& signals, Batch& targets) {
  const auto m = data.front().signal.size();
  const auto n = data.front().target.size();
  signals.resize(m, static_cast<Eigen::Index>(idx.size()));
  targets.resize(n, static_cast<Eigen::Index>(idx.size()));
  for (std::size_t c = 0; c < idx.size(); ++c) {
    signals.col(static_cast<Eigen::Index>(c)) = data[idx[c]].signal;
    targets.col(static_cast<Eigen::Index>(c)) = data[idx[c]].target;
  }
}

template <typename Params>
double loss_impl(const Params& params, std::span<const Example> batch) {
  params.validate();
  require(!batch.empty(), ErrorCode::InvalidArgument, "empty batch");
  check_examples(batch, params.signal_dim(), params.code_dim());
  double total = 0.0;
  std::vector<std::size_t> idx;
  Batch y, x;
  for (std::size_t start = 0; start < batch.size(); start += kEvalChunk) {
    const auto end = std::min(batch.size(), start + kEvalChunk);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    gather<std::size_t>(batch, idx, y, x);
    Batch out;
    if constexpr (std::is_same_v<Params, LsalsaParams>)
      out = lsalsa_forward(params, y);
    else
      out = lista_forward(params, y);
    total += (out - x).squaredNorm();
  }
  return total / (2.0 * static_cast<double>(batch.size()));
}

}  // namespace

double prediction_loss(const LsalsaParams& params, std::span<const Example> batch) {
  return loss_impl(params, batch);
}

double prediction_loss(const ListaParams& params, std::span<const Example> batch) {
  return loss_impl(params, batch);
}

LsalsaGradients lsalsa_backward(const LsalsaParams& params, const LsalsaTape& tape, const Batch& targets) {
  require(!tape.empty() && tape.depth() == params.depth, ErrorCode::MissingTape,
          "backward needs a full forward tape");
  require(targets.rows() == tape.output.rows() && targets.cols() == tape.output.cols(),
          ErrorCode::ShapeMismatch, "targets do not match the tape's output");
  const Vector taus = params.partition.thresholds(params.alphas, params.mu);
  const double mu = params.mu;
  const Matrix& s = params.splitting;
  const int depth = params.depth;
  const double inv_batch = 1.0 / static_cast<double>(targets.cols());

  // Output stage: out = soft(x_T).
  Batch gx = (tape.output - targets).cwiseProduct(active_mask(tape.x[depth], taus));
  Batch gd = Batch::Zero(gx.rows(), gx.cols());
  Batch g_filtered = Batch::Zero(gx.rows(), gx.cols());
  Eigen::MatrixXd ds = Eigen::MatrixXd::Zero(s.rows(), s.cols());

  for (int t = depth; t >= 1; --t) {
    const Batch& d_prev = tape.d[t - 1];
    const Batch& u = tape.u[t];
    // d_t = d_{t-1} - u_t + x_t  and  x_t = S r_t,  r_t = W_e y + mu (u_t - d_{t-1})
    const Batch gx_total = gx + gd;
    const Batch r = tape.filtered + mu * (u - d_prev);
    ds.noalias() += gx_total * r.transpose();
    const Batch gr = s.transpose() * gx_total;
    g_filtered += gr;
    const Batch gu = mu * gr - gd;
    Batch gd_prev = gd - mu * gr;
    // u_t = soft(x_{t-1} + d_{t-1})
    const Batch ga = gu.cwiseProduct(active_mask(tape.x[t - 1] + d_prev, taus));
    gd_prev += ga;
    gx = ga;
    gd = std::move(gd_prev);
  }
  g_filtered += gx;  // x_0 = W_e y

  LsalsaGradients grads;
  grads.encoder = (g_filtered * tape.signals.transpose()) * inv_batch;
  grads.splitting = ds * inv_batch;
  return grads;
}

LsalsaGradients lsalsa_backward(const LsalsaParams& params, const LsalsaTape& tape, const Vector& target) {
  return lsalsa_backward(params, tape, detail::as_batch(target));
}

ListaGradients lista_backward(const ListaParams& params, const ListaTape& tape, const Batch& targets) {
  require(!tape.empty() && static_cast<int>(tape.u.size()) == params.depth + 1, ErrorCode::MissingTape,
          "backward needs a full forward tape");
  const Batch& out = tape.u.back();
  require(targets.rows() == out.rows() && targets.cols() == out.cols(), ErrorCode::ShapeMismatch,
          "targets do not match the tape's output");
  const double inv_batch = 1.0 / static_cast<double>(targets.cols());
  const Matrix& inhibition = params.inhibition;

  Batch gu = out - targets;
  Batch g_filtered = Batch::Zero(gu.rows(), gu.cols());
  Eigen::MatrixXd ds = Eigen::MatrixXd::Zero(inhibition.rows(), inhibition.cols());
  Vector dtheta = Vector::Zero(gu.rows());

  for (int t = params.depth; t >= 1; --t) {
    const Batch& pre = tape.pre[t];
    const Batch mask = active_mask(pre, params.thresholds);
    const Batch gpre = gu.cwiseProduct(mask);
    // d soft(z; theta) / d theta = -sign(z) on the active set.
    dtheta -= (gpre.array() * pre.array().sign()).matrix().rowwise().sum();
    ds.noalias() += gpre * tape.u[t - 1].transpose();
    g_filtered += gpre;
    gu = inhibition.transpose() * gpre;
  }

  ListaGradients grads;
  grads.encoder = (g_filtered * tape.signals.transpose()) * inv_batch;
  grads.inhibition = ds * inv_batch;
  grads.thresholds = dtheta * inv_batch;
  return grads;
}

ListaGradients lista_backward(const ListaParams& params, const ListaTape& tape, const Vector& target) {
  return lista_backward(params, tape, detail::as_batch(target));
}

double mean_rmse(const Encoder& encoder, std::span<const Example> data) {
  require(!data.empty(), ErrorCode::InvalidArgument, "empty evaluation set");
  double total = 0.0;
  for (const auto& ex : data) total += rmse(encoder.encode(ex.signal).values, ex.target);
  return total / static_cast<double>(data.size());
}

namespace {

void sgd_step(LsalsaParams& p, const Batch& y, const Batch& x, double lr, const TrainConfig&) {
  LsalsaTape tape;
  lsalsa_forward(p, y, &tape);
  const auto g = lsalsa_backward(p, tape, x);
  p.encoder -= lr * g.encoder;
  p.splitting -= lr * g.splitting;
}

void sgd_step(ListaParams& p, const Batch& y, const Batch& x, double lr, const TrainConfig& cfg) {
  ListaTape tape;
  lista_forward(p, y, &tape);
  const auto g = lista_backward(p, tape, x);
  p.encoder -= lr * g.encoder;
  p.inhibition -= lr * g.inhibition;
  // Projected step keeps theta >= 0.
  if (cfg.learn_theta) p.thresholds = (p.thresholds - lr * g.thresholds).cwiseMax(0.0);
}

bool params_finite(const LsalsaParams& p) { return p.encoder.allFinite() && p.splitting.allFinite(); }
bool params_finite(const ListaParams& p) {
  return p.encoder.allFinite() && p.inhibition.allFinite() && p.thresholds.allFinite();
}

Encoder make_encoder(const LsalsaParams& p) { return Encoder::lsalsa(p); }
Encoder make_encoder(const ListaParams& p) { return Encoder::lista(p); }

template <typename Params>
TrainResult<Params> sgd(const Params& init, std::span<const Example> data, const TrainConfig& config,
                        std::span<const Example> validation) {
  config.validate();
  init.validate();
  require(!data.empty(), ErrorCode::InvalidArgument, "training set is empty");
  check_examples(data, init.signal_dim(), init.code_dim());
  check_examples(validation, init.signal_dim(), init.code_dim());

  TrainResult<Params> result{init, {}, false};
  Params& params = result.params;
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto bs = static_cast<std::size_t>(config.batch_size);

  double lr = config.learning_rate;
  double prev_loss = std::numeric_limits<double>::quiet_NaN();
  Batch y, x;
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const auto count = std::min(bs, order.size() - start);
      gather<std::size_t>(data, std::span<const std::size_t>(order).subspan(start, count), y, x);
      try {
        sgd_step(params, y, x, lr, config);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::NonFiniteActivation)
          fail(ErrorCode::DivergedLoss, "epoch " + std::to_string(epoch) + ": " + e.what());
        throw;
      }
      require(params_finite(params), ErrorCode::DivergedLoss,
              "parameters became non-finite in epoch " + std::to_string(epoch) + " (lr too large?)");
    }
    double loss = std::numeric_limits<double>::infinity();
    try {
      loss = prediction_loss(params, data);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NonFiniteActivation) throw;
    }
    require(std::isfinite(loss), ErrorCode::DivergedLoss,
            "training loss is not finite after epoch " + std::to_string(epoch));
    EpochRecord rec{epoch, lr, loss, std::numeric_limits<double>::quiet_NaN()};
    if (!validation.empty()) rec.val_rmse = mean_rmse(make_encoder(params), validation);
    result.history.push_back(rec);
    if (epoch > 1 && std::abs(loss - prev_loss) / std::max(prev_loss, 1e-300) < config.rel_cost_tol) {
      result.converged = true;
      break;
    }
    prev_loss = loss;
    lr *= config.lr_decay;
  }
  return result;
}

}  // namespace

TrainResult<LsalsaParams> train(const LsalsaParams& init, std::span<const Example> data,
                                const TrainConfig& config, std::span<const Example> validation) {
  return sgd(init, data, config, validation);
}

TrainResult<ListaParams> train(const ListaParams& init, std::span<const Example> data,
                               const TrainConfig& config, std::span<const Example> validation) {
  return sgd(init, data, config, validation);
}

void write_loss_history_csv(std::ostream& out, const std::vector<EpochRecord>& history) {
  out << "epoch,lr,train_loss,val_rmse\n";
  out.precision(17);
  for (const auto& r : history) out << r.epoch << ',' << r.lr << ',' << r.train_loss << ',' << r.val_rmse << '\n';
}

GridResult grid_search(std::span<const Example> train_set, std::span<const Example> val_set,
                       const ConcatDictionary& dict, const GridSpec& grid, Method method) {
  grid.validate();
  require(!train_set.empty() || !is_learned(method), ErrorCode::InvalidArgument, "training set is empty");
  require(!val_set.empty(), ErrorCode::InvalidArgument, "validation set is empty");

  // Axes that do not apply to a method collapse to a single placeholder.
  const bool learned = is_learned(method);
  const bool uses_mu = method == Method::SALSA || method == Method::LSALSA;
  const std::vector<double> mus = uses_mu ? grid.mu : std::vector<double>{0.0};
  const std::vector<int> batches = learned ? grid.batch_size : std::vector<int>{0};
  const std::vector<double> lrs = learned ? grid.learning_rate : std::vector<double>{0.0};
  const std::vector<double> decays = learned ? grid.lr_decay : std::vector<double>{1.0};

  GridResult result;
  std::size_t index = 0;
  for (const auto& alphas : grid.alphas)
    for (double mu : mus)
      for (int bs : batches)
        for (double lr : lrs)
          for (double decay : decays) {
            GridCell cell{index, alphas, mu, bs, lr, decay, 0.0, false, {}};
            try {
              if (learned) {
                TrainConfig tc;
                tc.learning_rate = lr;
                tc.lr_decay = decay;
                tc.batch_size = bs;
                tc.max_epochs = grid.epochs;
                tc.seed = grid.seed ^ static_cast<std::uint64_t>(index);
                if (method == Method::LSALSA) {
                  auto trained = train(lsalsa_init(dict, alphas, mu, grid.depth), train_set, tc);
                  cell.val_rmse = mean_rmse(Encoder::lsalsa(std::move(trained.params)), val_set);
                } else {
                  auto trained = train(lista_init(dict, alphas, grid.depth), train_set, tc);
                  cell.val_rmse = mean_rmse(Encoder::lista(std::move(trained.params)), val_set);
                }
              } else {
                SolverConfig sc;
                sc.alphas = alphas;
                sc.mu = uses_mu ? mu : 10.0;
                sc.max_iters = grid.depth;
                sc.stop_tol = 0.0;
                cell.val_rmse = mean_rmse(Encoder::iterative(method, dict, sc), val_set);
              }
              cell.ok = std::isfinite(cell.val_rmse);
              if (!cell.ok) cell.error = "non-finite validation RMSE";
            } catch (const Error& e) {
              cell.error = e.what();
            }
            result.leaderboard.push_back(std::move(cell));
            ++index;
          }

  std::stable_sort(result.leaderboard.begin(), result.leaderboard.end(),
                   [](const GridCell& a, const GridCell& b) {
                     if (a.ok != b.ok) return a.ok;
                     if (!a.ok) return a.index < b.index;
                     if (a.val_rmse != b.val_rmse) return a.val_rmse < b.val_rmse;
                     if (a.alphas != b.alphas) return a.alphas < b.alphas;
                     if (a.learning_rate != b.learning_rate) return a.learning_rate < b.learning_rate;
                     return a.index < b.index;
                   });
  if (!result.leaderboard.empty() && result.leaderboard.front().ok) result.best = result.leaderboard.front();
  return result;
}

void write_leaderboard_csv(std::ostream& out, const GridResult& result) {
  out << "rank,cell,alphas,mu,batch_size,learning_rate,lr_decay,val_rmse,status\n";
  out.precision(17);
  std::size_t rank = 0;
  for (const auto& c : result.leaderboard) {
    out << ++rank << ',' << c.index << ',';
    for (std::size_t i = 0; i < c.alphas.size(); ++i) out << (i ? ";" : "") << c.alphas[i];
    out << ',' << c.mu << ',' << c.batch_size << ',' << c.learning_rate << ',' << c.lr_decay << ',';
    if (c.ok)
      out << c.val_rmse << ",ok\n";
    else
      out << ",\"failed: " << c.error << "\"\n";
  }
}

}  // namespace lsalsa
