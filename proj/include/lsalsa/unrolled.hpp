#pragma once

#include <filesystem>
#include <optional>
#include <variant>

#include "lsalsa/core.hpp"

namespace lsalsa {

/// Column-per-sample activations for batched forward/backward passes.
using Batch = Eigen::MatrixXd;

/// Learnable LSALSA encoder: W_e (N x M) and one splitting matrix S (N x N)
/// shared by every layer. alphas, mu and depth are fixed hyperparameters.
struct LsalsaParams {
  Matrix encoder;
  Matrix splitting;
  std::vector<double> alphas;
  double mu = 10.0;
  int depth = 1;
  Partition partition;

  std::size_t code_dim() const { return static_cast<std::size_t>(encoder.rows()); }
  std::size_t signal_dim() const { return static_cast<std::size_t>(encoder.cols()); }
  void validate() const;
};

/// Learnable LISTA encoder: u(t) = soft(W_e y + S~ u(t-1); theta).
struct ListaParams {
  Matrix encoder;
  Matrix inhibition;
  Vector thresholds;
  int depth = 1;
  Partition partition;

  std::size_t code_dim() const { return static_cast<std::size_t>(encoder.rows()); }
  std::size_t signal_dim() const { return static_cast<std::size_t>(encoder.cols()); }
  void validate() const;
};

/// Activations retained for backprop. Index t holds layer t; u[0] is unused
/// for LSALSA (u starts at layer 1).
struct LsalsaTape {
  Batch signals;
  Batch filtered;  // W_e y
  std::vector<Batch> x;
  std::vector<Batch> u;
  std::vector<Batch> d;
  Batch output;

  bool empty() const { return x.empty(); }
  int depth() const { return x.empty() ? 0 : static_cast<int>(x.size()) - 1; }
};

struct ListaTape {
  Batch signals;
  Batch filtered;
  std::vector<Batch> pre;  // pre[t] = W_e y + S~ u(t-1), t = 1..T (pre[0] unused)
  std::vector<Batch> u;    // u[0] = 0
  bool empty() const { return u.empty(); }
};

/// W_e = A^T, S = (mu I + A^T A)^{-1}.
LsalsaParams lsalsa_init(const ConcatDictionary& dict, std::vector<double> alphas, double mu, int depth);

/// W_e = A^T / L, S~ = I - A^T A / L, theta_j = alpha_{block(j)} / L.
ListaParams lista_init(const ConcatDictionary& dict, std::span<const double> alphas, int depth,
                       std::optional<double> lipschitz = std::nullopt);

ComponentCode lsalsa_forward(const LsalsaParams& params, const Vector& signal, LsalsaTape* tape = nullptr);
Batch lsalsa_forward(const LsalsaParams& params, const Batch& signals, LsalsaTape* tape = nullptr);

ComponentCode lista_forward(const ListaParams& params, const Vector& signal, ListaTape* tape = nullptr);
Batch lista_forward(const ListaParams& params, const Batch& signals, ListaTape* tape = nullptr);

/// Writes `manifest` (JSON) plus sibling LSAM files named after its stem.
void save_params(const LsalsaParams& params, const std::filesystem::path& manifest);
void save_params(const ListaParams& params, const std::filesystem::path& manifest);

using EncoderParams = std::variant<LsalsaParams, ListaParams>;
EncoderParams load_params(const std::filesystem::path& manifest);
LsalsaParams load_lsalsa(const std::filesystem::path& manifest);
ListaParams load_lista(const std::filesystem::path& manifest);

}  // namespace lsalsa
