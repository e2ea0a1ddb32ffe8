#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "lsalsa/data.hpp"
#include "lsalsa/diagnostics.hpp"
#include "lsalsa/dictlearn.hpp"
#include "lsalsa/experiment.hpp"
#include "lsalsa/lsam.hpp"
#include "lsalsa/solvers.hpp"
#include "lsalsa/training.hpp"

namespace py = pybind11;
using namespace lsalsa;

namespace {

ConcatDictionary to_dict(const std::vector<Matrix>& parts) {
  std::vector<Dictionary> ds;
  for (const auto& p : parts) ds.emplace_back(p);
  return ConcatDictionary(std::move(ds));
}

std::vector<Example> examples(const Matrix& signals, const Matrix& targets) {
  require(signals.rows() == targets.rows(), ErrorCode::ShapeMismatch, "signals and targets need the same row count");
  std::vector<Example> out;
  for (Eigen::Index i = 0; i < signals.rows(); ++i)
    out.push_back({signals.row(i).transpose(), targets.row(i).transpose()});
  return out;
}

py::dict history_dict(const std::vector<EpochRecord>& history) {
  std::vector<int> epoch;
  std::vector<double> lr, loss, val;
  for (const auto& r : history) {
    epoch.push_back(r.epoch);
    lr.push_back(r.lr);
    loss.push_back(r.train_loss);
    val.push_back(r.val_rmse);
  }
  py::dict d;
  d["epoch"] = epoch;
  d["lr"] = lr;
  d["train_loss"] = loss;
  d["val_rmse"] = val;
  return d;
}

py::dict trace_dict(const SolverTrace& t) {
  py::dict d;
  d["code"] = t.code.values;
  d["iterations"] = t.iterations_run;
  d["converged"] = t.converged;
  if (t.split.size() > 0) d["split"] = t.split;
  return d;
}

SolverConfig solver_config(std::vector<double> alphas, double mu, int max_iters, double stop_tol,
                           bool emit_thresholded) {
  SolverConfig c;
  c.alphas = std::move(alphas);
  c.mu = mu;
  c.max_iters = max_iters;
  c.stop_tol = stop_tol;
  c.emit_thresholded = emit_thresholded;
  return c;
}

}  // namespace

PYBIND11_MODULE(_lsalsa, m) {
  m.doc() = "LSALSA sparse coding toolkit";
  m.attr("__version__") = std::string(kToolkitVersion);

  py::register_exception<Error>(m, "LsalsaError", PyExc_RuntimeError);

  m.def("soft_threshold", [](const Vector& z, double tau) { return soft_threshold(z, tau); }, py::arg("z"),
        py::arg("tau"));
  m.def(
      "normalize_columns", [](const Matrix& a) { return normalize_columns(Dictionary(a)).atoms(); }, py::arg("atoms"));
  m.def(
      "splitting_operator", [](const Matrix& a, double mu) { return build_splitting_operator(a, mu); },
      py::arg("atoms"), py::arg("mu"));
  m.def(
      "lasso_cost",
      [](const Vector& x, const Vector& y, const std::vector<Matrix>& parts, const std::vector<double>& alphas) {
        const auto d = to_dict(parts);
        return lasso_cost(x, y, d.matrix(), d.partition(), alphas);
      },
      py::arg("x"), py::arg("y"), py::arg("parts"), py::arg("alphas"));
  m.def(
      "random_dictionary",
      [](std::size_t rows, std::size_t cols, std::uint64_t seed) { return random_dictionary(rows, cols, seed).atoms(); },
      py::arg("rows"), py::arg("cols"), py::arg("seed"));
  m.def(
      "planted_signals",
      [](const Matrix& atoms, std::size_t count, std::size_t nonzeros, std::uint64_t seed) {
        const auto p = planted_signals(Dictionary(atoms), count, nonzeros, seed);
        return py::make_tuple(rows_from(p.signals), rows_from(p.codes));
      },
      py::arg("atoms"), py::arg("count"), py::arg("nonzeros"), py::arg("seed"));

  auto solver = [&](const char* name, auto fn) {
    m.def(
        name,
        [fn](const Vector& y, const std::vector<Matrix>& parts, std::vector<double> alphas, double mu, int max_iters,
             double stop_tol, bool emit_thresholded) {
          return trace_dict(fn(Signal(y), to_dict(parts),
                               solver_config(std::move(alphas), mu, max_iters, stop_tol, emit_thresholded)));
        },
        py::arg("y"), py::arg("parts"), py::arg("alphas"), py::arg("mu") = 10.0, py::arg("max_iters") = 100,
        py::arg("stop_tol") = 1e-6, py::arg("emit_thresholded") = true);
  };
  solver("ista", [](const Signal& y, const ConcatDictionary& d, const SolverConfig& c) { return ista(y, d, c); });
  solver("fista", [](const Signal& y, const ConcatDictionary& d, const SolverConfig& c) { return fista(y, d, c); });
  solver("salsa", [](const Signal& y, const ConcatDictionary& d, const SolverConfig& c) { return salsa(y, d, c); });

  py::class_<LsalsaParams>(m, "LsalsaParams")
      .def_readwrite("encoder", &LsalsaParams::encoder)
      .def_readwrite("splitting", &LsalsaParams::splitting)
      .def_readwrite("alphas", &LsalsaParams::alphas)
      .def_readwrite("mu", &LsalsaParams::mu)
      .def_readwrite("depth", &LsalsaParams::depth)
      .def_property_readonly("partition", [](const LsalsaParams& p) { return p.partition.sizes(); })
      .def("encode", [](const LsalsaParams& p, const Vector& y) { return lsalsa_forward(p, y).values; })
      .def("encode_batch",
           [](const LsalsaParams& p, const Matrix& ys) { return Matrix(lsalsa_forward(p, Batch(ys.transpose())).transpose()); })
      .def("save", [](const LsalsaParams& p, const std::filesystem::path& path) { save_params(p, path); });

  py::class_<ListaParams>(m, "ListaParams")
      .def_readwrite("encoder", &ListaParams::encoder)
      .def_readwrite("inhibition", &ListaParams::inhibition)
      .def_readwrite("thresholds", &ListaParams::thresholds)
      .def_readwrite("depth", &ListaParams::depth)
      .def_property_readonly("partition", [](const ListaParams& p) { return p.partition.sizes(); })
      .def("encode", [](const ListaParams& p, const Vector& y) { return lista_forward(p, y).values; })
      .def("encode_batch",
           [](const ListaParams& p, const Matrix& ys) { return Matrix(lista_forward(p, Batch(ys.transpose())).transpose()); })
      .def("save", [](const ListaParams& p, const std::filesystem::path& path) { save_params(p, path); });

  m.def(
      "lsalsa_init",
      [](const std::vector<Matrix>& parts, std::vector<double> alphas, double mu, int depth) {
        return lsalsa_init(to_dict(parts), std::move(alphas), mu, depth);
      },
      py::arg("parts"), py::arg("alphas"), py::arg("mu"), py::arg("depth"));
  m.def(
      "lista_init",
      [](const std::vector<Matrix>& parts, const std::vector<double>& alphas, int depth) {
        return lista_init(to_dict(parts), alphas, depth);
      },
      py::arg("parts"), py::arg("alphas"), py::arg("depth"));
  m.def("load_lsalsa", &load_lsalsa, py::arg("path"));
  m.def("load_lista", &load_lista, py::arg("path"));

  auto train_fn = [&](auto tag) {
    using Params = decltype(tag);
    m.def(
        "train",
        [](const Params& init, const Matrix& signals, const Matrix& targets, double learning_rate, int batch_size,
           int epochs, double lr_decay, double rel_cost_tol, std::uint64_t seed) {
          TrainConfig c;
          c.learning_rate = learning_rate;
          c.batch_size = batch_size;
          c.max_epochs = epochs;
          c.lr_decay = lr_decay;
          c.rel_cost_tol = rel_cost_tol;
          c.seed = seed;
          const auto data = examples(signals, targets);
          auto r = train(init, data, c);
          return py::make_tuple(std::move(r.params), history_dict(r.history));
        },
        py::arg("init"), py::arg("signals"), py::arg("targets"), py::arg("learning_rate") = 1e-3,
        py::arg("batch_size") = 100, py::arg("epochs") = 100, py::arg("lr_decay") = 1.0,
        py::arg("rel_cost_tol") = 1e-6, py::arg("seed") = 0);
    m.def(
        "prediction_loss",
        [](const Params& p, const Matrix& signals, const Matrix& targets) {
          const auto data = examples(signals, targets);
          return prediction_loss(p, data);
        },
        py::arg("params"), py::arg("signals"), py::arg("targets"));
  };
  train_fn(LsalsaParams{});
  train_fn(ListaParams{});

  m.def(
      "optimal_codes",
      [](const Matrix& signals, const std::vector<Matrix>& parts, std::vector<double> alphas, double mu,
         int max_iters, const std::string& method) {
        const auto m_ = parse_method(method);
        require(m_ == Method::FISTA || m_ == Method::SALSA, ErrorCode::UnknownMethod, "method must be FISTA or SALSA");
        const auto set = generate_optimal_codes(rows_of(signals), to_dict(parts),
                                                solver_config(std::move(alphas), mu, max_iters, 0.0, true),
                                                m_ == Method::FISTA ? CodeMethod::FISTA : CodeMethod::SALSA);
        std::vector<Vector> codes;
        for (const auto& c : set.codes) codes.push_back(c.values);
        return py::make_tuple(rows_from(codes), set.mean_sparsity);
      },
      py::arg("signals"), py::arg("parts"), py::arg("alphas"), py::arg("mu") = 10.0, py::arg("max_iters") = 200,
      py::arg("method") = "FISTA");

  m.def(
      "learn_dictionary",
      [](const Matrix& signals, const Matrix& init, double alpha, double learning_rate, int batch_size, int epochs,
         int fista_iters, std::uint64_t seed) {
        DictLearnOptions o;
        o.alpha = alpha;
        o.fista_iters = fista_iters;
        o.train.learning_rate = learning_rate;
        o.train.batch_size = batch_size;
        o.train.max_epochs = epochs;
        o.train.seed = seed;
        auto r = learn_dictionary(rows_of(signals), Dictionary(init), o);
        return py::make_tuple(r.dictionary.atoms(), r.cost_history);
      },
      py::arg("signals"), py::arg("init"), py::arg("alpha") = 0.1, py::arg("learning_rate") = 1.0,
      py::arg("batch_size") = 100, py::arg("epochs") = 10, py::arg("fista_iters") = 200, py::arg("seed") = 0);

  m.def(
      "primal_residual",
      [](const LsalsaParams& p, const Vector& y) {
        LsalsaTape tape;
        lsalsa_forward(p, y, &tape);
        return max_primal_residual(p, tape);
      },
      py::arg("params"), py::arg("y"));
  m.def(
      "recursion_deviation",
      [](const LsalsaParams& p, const Vector& y, int depth) { return recursion_oracle(p, y, depth).absolute; },
      py::arg("params"), py::arg("y"), py::arg("depth"));
  m.def(
      "learned_f1", [](const LsalsaParams& p, const Vector& y, const Vector& x) { return learned_f1(p, y, x); },
      py::arg("params"), py::arg("y"), py::arg("x"));
  m.def(
      "descent_modifier",
      [](const LsalsaParams& p, const std::vector<Matrix>& parts) { return descent_modifier(p, to_dict(parts)).p; },
      py::arg("params"), py::arg("parts"));
  m.def(
      "diagnostics",
      [](const LsalsaParams& p, const std::vector<Matrix>& parts, const Matrix& signals, std::uint64_t seed) {
        const auto r = run_diagnostics(p, to_dict(parts), rows_of(signals), seed);
        py::dict d;
        d["theorem1_residual_max"] = r.theorem1_residual_max;
        d["f1hat_init_dev"] = r.f1hat_init_dev;
        d["P_frobenius"] = r.p_frobenius;
        d["P_sym_eig_min"] = r.p_sym_eig_min;
        d["P_sym_eig_max"] = r.p_sym_eig_max;
        d["recursion_dev"] = r.recursion_dev;
        return d;
      },
      py::arg("params"), py::arg("parts"), py::arg("signals"), py::arg("seed") = 0);

  m.def("command_names", [] {
    std::vector<std::string> out;
    for (auto n : command_names()) out.emplace_back(n);
    return out;
  });
  m.def(
      "run_command",
      [](const std::string& name, const std::filesystem::path& config, std::optional<std::filesystem::path> out,
         std::optional<std::uint64_t> seed) {
        CommandOptions opts;
        opts.out = std::move(out);
        opts.seed = seed;
        opts.quiet = true;
        const auto r = run_command(name, load_experiment(config, opts));
        std::vector<std::filesystem::path> paths;
        for (const auto& o : r.outputs) paths.push_back(o.path);
        return paths;
      },
      py::arg("name"), py::arg("config"), py::arg("out") = py::none(), py::arg("seed") = py::none());
}
