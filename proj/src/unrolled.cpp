#include "lsalsa/unrolled.hpp"

#include <fstream>

#include "batch_ops.hpp"
#include "json.hpp"
#include "lsalsa/lsam.hpp"
#include "lsalsa/solvers.hpp"

namespace lsalsa {

using detail::soft_rows;
using nlohmann::json;

void LsalsaParams::validate() const {
  const auto n = encoder.rows();
  require(n >= 1 && encoder.cols() >= 1, ErrorCode::ShapeMismatch, "W_e must be non-empty");
  require(splitting.rows() == n && splitting.cols() == n, ErrorCode::ShapeMismatch, "S must be N x N");
  require(partition.total() == static_cast<std::size_t>(n), ErrorCode::ShapeMismatch,
          "partition does not cover the code dimension");
  require(alphas.size() == partition.blocks(), ErrorCode::PartitionMismatch, "one alpha per block");
  for (double a : alphas) require(a >= 0.0, ErrorCode::InvalidArgument, "alpha must be >= 0");
  require(mu > 0.0, ErrorCode::InvalidArgument, "mu must be > 0");
  require(depth >= 1, ErrorCode::InvalidArgument, "depth must be >= 1");
  require(encoder.allFinite() && splitting.allFinite(), ErrorCode::InvalidArgument,
          "parameters must be finite");
}

void ListaParams::validate() const {
  const auto n = encoder.rows();
  require(n >= 1 && encoder.cols() >= 1, ErrorCode::ShapeMismatch, "W_e must be non-empty");
  require(inhibition.rows() == n && inhibition.cols() == n, ErrorCode::ShapeMismatch, "S~ must be N x N");
  require(thresholds.size() == n, ErrorCode::ShapeMismatch, "theta must have length N");
  require(partition.total() == static_cast<std::size_t>(n), ErrorCode::ShapeMismatch,
          "partition does not cover the code dimension");
  require((thresholds.array() >= 0.0).all(), ErrorCode::InvalidArgument, "theta must be >= 0");
  require(depth >= 1, ErrorCode::InvalidArgument, "depth must be >= 1");
  require(encoder.allFinite() && inhibition.allFinite() && thresholds.allFinite(),
          ErrorCode::InvalidArgument, "parameters must be finite");
}

LsalsaParams lsalsa_init(const ConcatDictionary& dict, std::vector<double> alphas, double mu, int depth) {
  require(depth >= 1, ErrorCode::InvalidArgument, "depth must be >= 1");
  LsalsaParams p;
  p.encoder = dict.matrix().transpose();
  p.splitting = build_splitting_operator(dict, mu);
  p.alphas = std::move(alphas);
  p.mu = mu;
  p.depth = depth;
  p.partition = dict.partition();
  p.validate();
  return p;
}

ListaParams lista_init(const ConcatDictionary& dict, std::span<const double> alphas, int depth,
                       std::optional<double> lipschitz) {
  require(depth >= 1, ErrorCode::InvalidArgument, "depth must be >= 1");
  const Matrix& a = dict.matrix();
  const double lip = lipschitz ? *lipschitz : estimate_lipschitz(a);
  require(lip > 0.0, ErrorCode::InvalidArgument, "lipschitz must be > 0");
  ListaParams p;
  p.encoder = a.transpose() / lip;
  p.inhibition = Matrix::Identity(a.cols(), a.cols()) - a.transpose() * a / lip;
  p.thresholds = dict.partition().thresholds(alphas, lip);
  p.depth = depth;
  p.partition = dict.partition();
  p.validate();
  return p;
}

Batch lsalsa_forward(const LsalsaParams& params, const Batch& signals, LsalsaTape* tape) {
  require(static_cast<std::size_t>(signals.rows()) == params.signal_dim(), ErrorCode::ShapeMismatch,
          "signal length does not match W_e");
  const Vector taus = params.partition.thresholds(params.alphas, params.mu);
  const double mu = params.mu;
  const Matrix& s = params.splitting;

  Batch wy = params.encoder * signals;
  Batch x = wy;
  Batch d = Batch::Zero(x.rows(), x.cols());
  if (tape) {
    *tape = LsalsaTape{};
    tape->signals = signals;
    tape->filtered = wy;
    tape->x.push_back(x);
    tape->u.emplace_back();
    tape->d.push_back(d);
  }
  for (int t = 1; t <= params.depth; ++t) {
    Batch u = soft_rows(x + d, taus);
    x = s * (wy + mu * (u - d));
    d = d - u + x;
    require(x.allFinite() && d.allFinite(), ErrorCode::NonFiniteActivation,
            "non-finite activation at layer " + std::to_string(t));
    if (tape) {
      tape->x.push_back(x);
      tape->u.push_back(std::move(u));
      tape->d.push_back(d);
    }
  }
  Batch out = soft_rows(x, taus);
  if (tape) tape->output = out;
  return out;
}

ComponentCode lsalsa_forward(const LsalsaParams& params, const Vector& signal, LsalsaTape* tape) {
  Batch out = lsalsa_forward(params, detail::as_batch(signal), tape);
  return ComponentCode(Vector(out.col(0)), params.partition);
}

Batch lista_forward(const ListaParams& params, const Batch& signals, ListaTape* tape) {
  require(static_cast<std::size_t>(signals.rows()) == params.signal_dim(), ErrorCode::ShapeMismatch,
          "signal length does not match W_e");
  Batch wy = params.encoder * signals;
  Batch u = Batch::Zero(wy.rows(), wy.cols());
  if (tape) {
    *tape = ListaTape{};
    tape->signals = signals;
    tape->filtered = wy;
    tape->pre.emplace_back();
    tape->u.push_back(u);
  }
  for (int t = 1; t <= params.depth; ++t) {
    Batch pre = wy + params.inhibition * u;
    u = soft_rows(pre, params.thresholds);
    require(u.allFinite(), ErrorCode::NonFiniteActivation,
            "non-finite activation at layer " + std::to_string(t));
    if (tape) {
      tape->pre.push_back(std::move(pre));
      tape->u.push_back(u);
    }
  }
  return u;
}

ComponentCode lista_forward(const ListaParams& params, const Vector& signal, ListaTape* tape) {
  Batch out = lista_forward(params, detail::as_batch(signal), tape);
  return ComponentCode(Vector(out.col(0)), params.partition);
}

namespace {

std::filesystem::path sibling(const std::filesystem::path& manifest, const std::string& role) {
  return manifest.parent_path() / (manifest.stem().string() + "." + role + ".lsam");
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  require(out.is_open(), ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.is_open(), ErrorCode::IoError, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::FormatError, path.string() + ": " + e.what());
  }
}

json partition_json(const Partition& p) { return json(p.sizes()); }

Matrix load_matrix(const std::filesystem::path& manifest, const json& j, const std::string& role,
                   Eigen::Index rows, Eigen::Index cols) {
  const auto name = j.at("files").at(role).get<std::string>();
  Matrix m = read_lsam(manifest.parent_path() / name);
  require(m.rows() == rows && m.cols() == cols, ErrorCode::ShapeMismatch,
          role + " is " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ", manifest expects " +
              std::to_string(rows) + "x" + std::to_string(cols));
  return m;
}

}  // namespace

void save_params(const LsalsaParams& params, const std::filesystem::path& manifest) {
  params.validate();
  const auto enc = sibling(manifest, "encoder");
  const auto spl = sibling(manifest, "splitting");
  write_lsam(enc, params.encoder);
  write_lsam(spl, params.splitting);
  json j;
  j["kind"] = "lsalsa";
  j["M"] = params.signal_dim();
  j["N"] = params.code_dim();
  j["D"] = params.partition.blocks();
  j["partition"] = partition_json(params.partition);
  j["alphas"] = params.alphas;
  j["mu"] = params.mu;
  j["depth"] = params.depth;
  j["files"] = {{"encoder", enc.filename().string()}, {"splitting", spl.filename().string()}};
  write_json(manifest, j);
}

void save_params(const ListaParams& params, const std::filesystem::path& manifest) {
  params.validate();
  const auto enc = sibling(manifest, "encoder");
  const auto inh = sibling(manifest, "inhibition");
  const auto thr = sibling(manifest, "thresholds");
  write_lsam(enc, params.encoder);
  write_lsam(inh, params.inhibition);
  write_lsam(thr, Matrix(params.thresholds));
  json j;
  j["kind"] = "lista";
  j["M"] = params.signal_dim();
  j["N"] = params.code_dim();
  j["D"] = params.partition.blocks();
  j["partition"] = partition_json(params.partition);
  j["depth"] = params.depth;
  j["files"] = {{"encoder", enc.filename().string()},
                {"inhibition", inh.filename().string()},
                {"thresholds", thr.filename().string()}};
  write_json(manifest, j);
}

EncoderParams load_params(const std::filesystem::path& manifest) {
  const json j = read_json(manifest);
  try {
    const auto kind = j.at("kind").get<std::string>();
    const auto m = j.at("M").get<Eigen::Index>();
    const auto n = j.at("N").get<Eigen::Index>();
    Partition partition(j.at("partition").get<std::vector<std::size_t>>());
    require(j.at("D").get<std::size_t>() == partition.blocks(), ErrorCode::FormatError,
            "D disagrees with partition");
    if (kind == "lsalsa") {
      LsalsaParams p;
      p.encoder = load_matrix(manifest, j, "encoder", n, m);
      p.splitting = load_matrix(manifest, j, "splitting", n, n);
      p.alphas = j.at("alphas").get<std::vector<double>>();
      p.mu = j.at("mu").get<double>();
      p.depth = j.at("depth").get<int>();
      p.partition = std::move(partition);
      p.validate();
      return p;
    }
    if (kind == "lista") {
      ListaParams p;
      p.encoder = load_matrix(manifest, j, "encoder", n, m);
      p.inhibition = load_matrix(manifest, j, "inhibition", n, n);
      p.thresholds = load_matrix(manifest, j, "thresholds", n, 1).col(0);
      p.depth = j.at("depth").get<int>();
      p.partition = std::move(partition);
      p.validate();
      return p;
    }
    fail(ErrorCode::FormatError, "unknown parameter kind '" + kind + "'");
  } catch (const json::exception& e) {
    fail(ErrorCode::FormatError, manifest.string() + ": " + e.what());
  }
}

LsalsaParams load_lsalsa(const std::filesystem::path& manifest) {
  auto p = load_params(manifest);
  require(std::holds_alternative<LsalsaParams>(p), ErrorCode::FormatError,
          manifest.string() + " does not hold LSALSA parameters");
  return std::get<LsalsaParams>(std::move(p));
}

ListaParams load_lista(const std::filesystem::path& manifest) {
  auto p = load_params(manifest);
  require(std::holds_alternative<ListaParams>(p), ErrorCode::FormatError,
          manifest.string() + " does not hold LISTA parameters");
  return std::get<ListaParams>(std::move(p));
}

}  // namespace lsalsa
