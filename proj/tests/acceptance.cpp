// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include "gradcheck.hpp"
#include "json.hpp"
#include "lsalsa/data.hpp"
#include "lsalsa/diagnostics.hpp"
#include "lsalsa/dictlearn.hpp"
#include "lsalsa/eval.hpp"
#include "lsalsa/experiment.hpp"
#include "lsalsa/solvers.hpp"

using namespace lsalsa;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

std::string fmt(const char* spec, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, spec, args...);
  return buf;
}

struct Instance {
  ConcatDictionary dict;
  std::vector<double> alphas;
  double mu;
  Vector y;
};

Instance random_instance(std::mt19937_64& rng, Eigen::Index m, Eigen::Index n, int components) {
  std::uniform_real_distribution<double> alpha(0.05, 0.5), mu(0.5, 10.0);
  std::vector<Eigen::Index> parts;
  if (components == 1)
    parts = {n};
  else
    parts = {n / 2, n - n / 2};
  auto dict = testing::concat_dict(m, parts, rng);
  std::vector<double> alphas;
  for (int i = 0; i < components; ++i) alphas.push_back(alpha(rng));
  const double mu_value = mu(rng);
  return {std::move(dict), std::move(alphas), mu_value, testing::gaussian_vec(m, rng)};
}

void perturb(LsalsaParams& p, std::mt19937_64& rng) {
  p.encoder += 0.05 * testing::gaussian(p.encoder.rows(), p.encoder.cols(), rng);
  p.splitting += 0.1 * p.splitting.cwiseAbs().maxCoeff() * testing::gaussian(p.splitting.rows(), p.splitting.cols(), rng);
}

Outcome init_equivalence() {
  std::mt19937_64 rng(1001);
  const int depths[] = {1, 3, 5, 10};
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const auto inst = random_instance(rng, 20, 30, 1 + k % 2);
    const int depth = depths[(k / 2) % 4];
    SolverConfig cfg;
    cfg.alphas = inst.alphas;
    cfg.mu = inst.mu;
    cfg.max_iters = depth;
    cfg.stop_tol = 0.0;
    const Vector truncated = salsa(Signal(inst.y), inst.dict, cfg).code.values;
    const Vector learned = lsalsa_forward(lsalsa_init(inst.dict, inst.alphas, inst.mu, depth), inst.y).values;
    worst = std::max(worst, (truncated - learned).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-10, fmt("max |LSALSA_init - SALSA_T| = %.3e over 100 instances", worst)};
}

Outcome theorem1_residual() {
  std::mt19937_64 rng(1002);
  std::uniform_int_distribution<int> depth(1, 10);
  double worst_init = 0.0, worst_perturbed = 0.0;
  for (int k = 0; k < 50; ++k) {
    const auto inst = random_instance(rng, 20, 30, 1 + k % 2);
    auto params = lsalsa_init(inst.dict, inst.alphas, inst.mu, depth(rng));
    LsalsaTape tape;
    lsalsa_forward(params, inst.y, &tape);
    worst_init = std::max(worst_init, max_primal_residual(params, tape));
    perturb(params, rng);
    lsalsa_forward(params, inst.y, &tape);
    worst_perturbed = std::max(worst_perturbed, max_primal_residual(params, tape));
  }
  return {std::max(worst_init, worst_perturbed) <= 1e-8,
          fmt("max relative residual: init %.3e, perturbed %.3e", worst_init, worst_perturbed)};
}

Outcome learned_lagrangian() {
  std::mt19937_64 rng(1003);
  double worst_f1 = 0.0, worst_p = 0.0;
  for (int k = 0; k < 100; ++k) {
    const auto inst = random_instance(rng, 20, 30, 1 + k % 2);
    const auto params = lsalsa_init(inst.dict, inst.alphas, inst.mu, 1);
    const Vector x = testing::gaussian_vec(30, rng);
    const double direct = 0.5 * (inst.y - inst.dict.matrix() * x).squaredNorm();
    worst_f1 = std::max(worst_f1, testing::rel_err(learned_f1(params, inst.y, x), direct));
    if (k % 5 == 0) worst_p = std::max(worst_p, descent_modifier(params, inst.dict).frobenius);
  }
  return {worst_f1 <= 1e-9 && worst_p <= 1e-8,
          fmt("max rel |f1hat - data term| = %.3e, max ||P||_F at init = %.3e", worst_f1, worst_p)};
}

Outcome recursion() {
  std::mt19937_64 rng(1004);
  double worst_abs = 0.0, worst_rel = 0.0;
  for (int k = 0; k < 20; ++k) {
    const auto inst = random_instance(rng, 20, 30, 1 + k % 2);
    for (int depth = 1; depth <= 6; ++depth) {
      const auto dev = recursion_oracle(lsalsa_init(inst.dict, inst.alphas, inst.mu, depth), inst.y, depth);
      worst_abs = std::max(worst_abs, dev.absolute);
      worst_rel = std::max(worst_rel, dev.relative);
    }
  }
  return {worst_abs <= 1e-8 && worst_rel <= 1e-8,
          fmt("max deviation %.3e (relative %.3e) over T = 1..6", worst_abs, worst_rel)};
}

double brute_prox(double z, double tau) {
  double best_x = 0.0, best = std::numeric_limits<double>::infinity();
  for (int i = -50000; i <= 50000; ++i) {
    const double x = 1e-4 * i;
    const double v = tau * std::abs(x) + 0.5 * (z - x) * (z - x);
    if (v < best) {
      best = v;
      best_x = x;
    }
  }
  return best_x;
}

Outcome prox_oracle() {
  const double taus[] = {0.0, 0.1, 0.5, 2.0};
  const double mu = 2.0;
  double worst = 0.0;
  for (double tau : taus) {
    Vector z(41);
    for (int i = 0; i < 41; ++i) z[i] = -3.0 + 0.15 * i + 0.003;
    const ComponentCode blocks(Vector(z.replicate(2, 1)), Partition({41, 41}));
    const std::vector<double> alphas{tau * mu, tau * mu};
    const auto prox = prox_weighted_l1(blocks, alphas, mu);
    const Vector vec = soft_threshold(z, Vector::Constant(41, tau));
    for (int i = 0; i < 41; ++i) {
      const double ref = brute_prox(z[i], tau);
      worst = std::max({worst, std::abs(soft_threshold(z[i], tau) - ref), std::abs(vec[i] - ref),
                        std::abs(prox.values[i] - ref), std::abs(prox.values[41 + i] - ref)});
    }
  }
  return {worst <= 1e-3, fmt("max |prox - grid argmin| = %.3e", worst)};
}

Outcome cross_solver() {
  std::mt19937_64 rng(1006);
  double worst = 0.0;
  int max_iters = 0;
  for (int k = 0; k < 3; ++k) {
    const ConcatDictionary dict(testing::unit_dict(50, 100, rng));
    const Signal y(testing::gaussian_vec(50, rng));
    SolverConfig cfg;
    cfg.alphas = {0.1};
    cfg.mu = 10.0;
    cfg.max_iters = 1000000;
    cfg.stop_tol = 1e-10;
    cfg.emit_thresholded = false;
    const TraceOptions quiet{.record = false};
    const auto a = ista(y, dict, cfg, quiet);
    const auto b = fista(y, dict, cfg, quiet);
    const auto c = salsa(y, dict, cfg, nullptr, quiet);
    const double ca = lasso_cost(a.code, y, dict, cfg.alphas);
    const double cb = lasso_cost(b.code, y, dict, cfg.alphas);
    const double cc = lasso_cost(c.code, y, dict, cfg.alphas);
    worst = std::max({worst, testing::rel_err(ca, cb), testing::rel_err(ca, cc), testing::rel_err(cb, cc)});
    max_iters = std::max({max_iters, a.iterations_run, b.iterations_run, c.iterations_run});
  }
  return {worst <= 1e-6, fmt("max relative cost gap %.3e (longest run %d iterations)", worst, max_iters)};
}

Outcome gradients() {
  std::mt19937_64 rng(1007);
  double worst = 0.0;
  int fewest = std::numeric_limits<int>::max();
  auto track = [&](const testing::ProbeStats& s) {
    worst = std::max(worst, s.worst);
    fewest = std::min(fewest, s.accepted);
  };
  for (int components : {1, 2}) {
    for (int depth = 1; depth <= 4; ++depth) {
      const auto dict = testing::concat_dict(8, components == 1 ? std::vector<Eigen::Index>{12}
                                                                  : std::vector<Eigen::Index>{5, 7}, rng);
      const std::vector<double> alphas(static_cast<std::size_t>(components), 0.15);
      const auto data = testing::random_examples(8, 12, 3, rng);
      const auto y = testing::signal_batch(data);
      const auto x = testing::target_batch(data);
      for (int round = 0; round < 2; ++round) {
        auto lp = lsalsa_init(dict, alphas, 2.0, depth);
        auto tp = lista_init(dict, alphas, depth);
        if (round == 1) {
          lp.encoder += 0.05 * testing::gaussian(12, 8, rng);
          lp.splitting += 0.02 * testing::gaussian(12, 12, rng);
          tp.encoder += 0.05 * testing::gaussian(12, 8, rng);
          tp.inhibition += 0.05 * testing::gaussian(12, 12, rng);
        }
        LsalsaTape lt;
        lsalsa_forward(lp, y, &lt);
        const auto lg = lsalsa_backward(lp, lt, x);
        track(testing::probe_gradient<LsalsaParams>(
            lp, data, [](LsalsaParams& q, Eigen::Index k) -> double& { return q.encoder.data()[k]; },
            lp.encoder.size(), [&](Eigen::Index k) { return lg.encoder.data()[k]; }, 20, rng));
        track(testing::probe_gradient<LsalsaParams>(
            lp, data, [](LsalsaParams& q, Eigen::Index k) -> double& { return q.splitting.data()[k]; },
            lp.splitting.size(), [&](Eigen::Index k) { return lg.splitting.data()[k]; }, 20, rng));
        ListaTape tt;
        lista_forward(tp, y, &tt);
        const auto tg = lista_backward(tp, tt, x);
        track(testing::probe_gradient<ListaParams>(
            tp, data, [](ListaParams& q, Eigen::Index k) -> double& { return q.encoder.data()[k]; },
            tp.encoder.size(), [&](Eigen::Index k) { return tg.encoder.data()[k]; }, 20, rng));
        track(testing::probe_gradient<ListaParams>(
            tp, data, [](ListaParams& q, Eigen::Index k) -> double& { return q.inhibition.data()[k]; },
            tp.inhibition.size(), [&](Eigen::Index k) { return tg.inhibition.data()[k]; }, 20, rng));
        track(testing::probe_gradient<ListaParams>(
            tp, data, [](ListaParams& q, Eigen::Index k) -> double& { return q.thresholds[k]; },
            tp.thresholds.size(), [&](Eigen::Index k) { return tg.thresholds[k]; }, 20, rng));
      }
    }
  }
  return {worst <= 1e-4 && fewest >= 20,
          fmt("max relative error %.3e, fewest accepted probes per matrix %d", worst, fewest)};
}

std::vector<Example> pair_up(std::span<const Vector> signals, const CodeSet& codes, std::size_t begin,
                             std::size_t end) {
  std::vector<Example> out;
  for (auto i = begin; i < end; ++i) out.push_back({signals[i], codes.codes[i].values});
  return out;
}

/// Truncated iterative baseline with mu picked on the validation set.
struct Baseline {
  double mu = 0.0;
  double test_rmse = 0.0;
};

Baseline tuned_salsa(const ConcatDictionary& dict, const std::vector<double>& alphas, int depth,
                     std::span<const Example> val, std::span<const Example> test) {
  Baseline best{0.0, std::numeric_limits<double>::infinity()};
  double best_val = std::numeric_limits<double>::infinity();
  for (double mu : {0.1, 1.0, 10.0}) {
    SolverConfig cfg;
    cfg.alphas = alphas;
    cfg.mu = mu;
    cfg.max_iters = depth;
    cfg.stop_tol = 0.0;
    const auto enc = Encoder::iterative(Method::SALSA, dict, cfg);
    const double v = mean_rmse(enc, val);
    if (v < best_val) {
      best_val = v;
      best = {mu, mean_rmse(enc, test)};
    }
  }
  return best;
}

/// Trains from `init` for each learning rate and returns the encoder with the best validation RMSE.
template <typename Params>
std::optional<Encoder> best_trained(const Params& init, std::span<const Example> train_set,
                                    std::span<const Example> val, std::initializer_list<double> lrs,
                                    std::string& log) {
  std::optional<Encoder> best;
  double best_val = std::numeric_limits<double>::infinity();
  for (double lr : lrs) {
    TrainConfig cfg;
    cfg.learning_rate = lr;
    cfg.batch_size = 20;
    cfg.max_epochs = 100;
    cfg.rel_cost_tol = 1e-6;
    cfg.seed = 17;
    try {
      auto r = train(init, train_set, cfg);
      auto enc = [&] {
        if constexpr (std::is_same_v<Params, LsalsaParams>)
          return Encoder::lsalsa(std::move(r.params));
        else
          return Encoder::lista(std::move(r.params));
      }();
      const double v = mean_rmse(enc, val);
      log += fmt(" lr=%g:val=%.4f(%zu ep)", lr, v, r.history.size());
      if (v < best_val) {
        best_val = v;
        best = std::move(enc);
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DivergedLoss) throw;
      log += fmt(" lr=%g:diverged", lr);
    }
  }
  return best;
}

Outcome training_acceleration() {
  const auto dict = random_dictionary(64, 100, 2001);
  const ConcatDictionary cd(dict);
  auto train_data = planted_signals(dict, 2000, 5, 2002);
  auto test_data = planted_signals(dict, 500, 5, 2003);
  // Measurement noise keeps the codes from being exactly sparse, so the sparsity target binds alpha.
  std::mt19937_64 noise_rng(2004);
  std::normal_distribution<double> noise(0.0, 0.05);
  for (auto* set : {&train_data, &test_data})
    for (auto& y : set->signals)
      for (auto& v : y) v += noise(noise_rng);

  SolverConfig fista_cfg;
  fista_cfg.max_iters = 200;
  fista_cfg.stop_tol = 0.0;
  std::optional<CodeSet> train_codes;
  double alpha = 0.0;
  for (double a : {0.01, 0.025, 0.05, 0.075, 0.1, 0.25, 0.5, 0.75, 1.0}) {
    fista_cfg.alphas = {a};
    auto codes = generate_optimal_codes(train_data.signals, cd, fista_cfg, CodeMethod::FISTA);
    if (codes.mean_sparsity >= 0.89) {
      alpha = a;
      train_codes = std::move(codes);
      break;
    }
  }
  if (!train_codes) return {false, "no alpha reached 89% sparsity"};
  const auto test_codes = generate_optimal_codes(test_data.signals, cd, fista_cfg, CodeMethod::FISTA);

  const auto train_set = pair_up(train_data.signals, *train_codes, 0, 1800);
  const auto val_set = pair_up(train_data.signals, *train_codes, 1800, 2000);
  const auto test_set = pair_up(test_data.signals, test_codes, 0, 500);
  const std::vector<double> alphas{alpha};

  const auto salsa3 = tuned_salsa(cd, alphas, 3, val_set, test_set);
  const auto salsa5 = tuned_salsa(cd, alphas, 5, val_set, test_set);
  std::string log;
  const auto lsalsa3 = best_trained(lsalsa_init(cd, alphas, salsa3.mu, 3), train_set, val_set, {1e-4, 1e-3, 1e-2}, log);
  if (!lsalsa3) return {false, "every learning rate diverged:" + log};
  const double learned = mean_rmse(*lsalsa3, test_set);
  const bool pass = learned <= 0.8 * salsa3.test_rmse && learned <= salsa5.test_rmse;
  return {pass, fmt("alpha=%g sparsity=%.3f; test RMSE LSALSA(3)=%.4f SALSA(3)=%.4f [mu=%g] SALSA(5)=%.4f [mu=%g]; "
                    "ratio %.3f;",
                    alpha, train_codes->mean_sparsity, learned, salsa3.test_rmse, salsa3.mu, salsa5.test_rmse,
                    salsa5.mu, learned / salsa3.test_rmse) +
                    log};
}

Outcome mca_separation() {
  const auto a1 = random_dictionary(64, 100, 3001);
  const auto a2 = random_dictionary(64, 100, 3002);
  const ConcatDictionary cd({a1, a2});
  const auto src1 = planted_signals(a1, 2000, 5, 3003);
  const auto src2 = planted_signals(a2, 2000, 5, 3004);
  const auto mix = make_mixtures(src1.signals, src2.signals, 2000, 3005);
  std::vector<Vector> ys;
  for (const auto& s : mix.mixtures) ys.push_back(s.data);
  const std::vector<double> alphas{0.125, 0.2};

  // SALSA-100 targets: keep the mu whose codes reach the lowest mean lasso cost.
  std::optional<CodeSet> codes;
  double code_mu = 0.0, best_cost = std::numeric_limits<double>::infinity();
  for (double mu : {0.1, 1.0, 10.0}) {
    SolverConfig cfg;
    cfg.alphas = alphas;
    cfg.mu = mu;
    cfg.max_iters = 100;
    cfg.stop_tol = 0.0;
    auto c = generate_optimal_codes(ys, cd, cfg, CodeMethod::SALSA);
    double cost = 0.0;
    for (std::size_t i = 0; i < ys.size(); ++i)
      cost += lasso_cost(c.codes[i].values, ys[i], cd.matrix(), cd.partition(), alphas);
    if (cost < best_cost) {
      best_cost = cost;
      code_mu = mu;
      codes = std::move(c);
    }
  }
  const auto train_set = pair_up(ys, *codes, 0, 1350);
  const auto val_set = pair_up(ys, *codes, 1350, 1500);
  const auto test_set = pair_up(ys, *codes, 1500, 2000);

  SolverConfig fista_cfg;
  fista_cfg.alphas = alphas;
  fista_cfg.max_iters = 5;
  fista_cfg.stop_tol = 0.0;
  const double fista5 = mean_rmse(Encoder::iterative(Method::FISTA, cd, fista_cfg), test_set);
  const auto salsa5 = tuned_salsa(cd, alphas, 5, val_set, test_set);
  std::string llog, tlog;
  const auto lsalsa5 =
      best_trained(lsalsa_init(cd, alphas, salsa5.mu, 5), train_set, val_set, {1e-4, 1e-3, 1e-2}, llog);
  const auto lista5 = best_trained(lista_init(cd, alphas, 5), train_set, val_set, {1e-3, 1e-2, 1e-1}, tlog);
  if (!lsalsa5 || !lista5) return {false, "training diverged at every learning rate"};
  const double ls = mean_rmse(*lsalsa5, test_set);
  const double li = mean_rmse(*lista5, test_set);
  const bool pass = ls < fista5 && ls < li && ls < salsa5.test_rmse;
  return {pass, fmt("code mu=%g sparsity=%.3f; test RMSE at T=5: LSALSA=%.4f LISTA=%.4f FISTA=%.4f SALSA=%.4f [mu=%g];"
                    " LSALSA",
                    code_mu, codes->mean_sparsity, ls, li, fista5, salsa5.test_rmse, salsa5.mu) +
                    llog + "; LISTA" + tlog};
}

Outcome point_cloud() {
  std::mt19937_64 rng(4001);
  const auto dict = testing::concat_dict(16, {10, 10}, rng);
  const std::vector<double> alphas{0.1, 0.1};
  SolverConfig cfg;
  cfg.alphas = alphas;
  cfg.mu = 1.0;
  cfg.max_iters = 300;
  cfg.stop_tol = 0.0;
  const auto fista = Encoder::iterative(Method::FISTA, dict, cfg);
  std::vector<Example> train_set, test_set;
  for (int i = 0; i < 140; ++i) {
    Vector y = testing::gaussian_vec(16, rng);
    Vector x = fista.encode(y).values;
    (i < 100 ? train_set : test_set).push_back({std::move(y), std::move(x)});
  }
  ModelTable table;
  table.add_iterative(Method::FISTA, dict, cfg);
  table.add_iterative(Method::SALSA, dict, cfg);
  TrainConfig tc;
  tc.batch_size = 10;
  tc.max_epochs = 5;
  for (int t : {1, 5}) {
    ModelBundle ls, li;
    tc.learning_rate = 1e-3;
    ls.lsalsa = train(lsalsa_init(dict, alphas, cfg.mu, t), train_set, tc).params;
    tc.learning_rate = 1e-2;
    li.lista = train(lista_init(dict, alphas, t), train_set, tc).params;
    table.add(Method::LSALSA, t, std::move(ls));
    table.add(Method::LISTA, t, std::move(li));
  }
  const std::vector<Method> methods{Method::FISTA, Method::SALSA, Method::LISTA, Method::LSALSA};
  const std::vector<int> depths{1, 5};
  const auto result = run_benchmark(methods, depths, test_set, table);
  const auto dir = testing::scratch_dir("acceptance_cloud");
  export_point_cloud(dir / "point_cloud.csv", result.points);

  std::ifstream in(dir / "point_cloud.csv");
  std::string line;
  std::getline(in, line);
  bool ok = line == "# schema=pointcloud-v1";
  std::getline(in, line);
  ok = ok && line == "method,T,sample_id,sparsity,rmse";
  std::map<std::pair<std::string, int>, std::set<std::size_t>> seen;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    std::istringstream cells(line);
    std::string method, t, id, sp, err;
    std::getline(cells, method, ',');
    std::getline(cells, t, ',');
    std::getline(cells, id, ',');
    std::getline(cells, sp, ',');
    std::getline(cells, err, ',');
    const double s = std::stod(sp), e = std::stod(err);
    ok = ok && s >= 0.0 && s <= 1.0 && std::isfinite(e) && e >= 0.0;
    seen[{method, std::stoi(t)}].insert(std::stoul(id));
  }
  ok = ok && rows == 4 * 2 * test_set.size() && seen.size() == 8;
  for (const auto& [key, ids] : seen) ok = ok && ids.size() == test_set.size() && *ids.rbegin() == test_set.size() - 1;
  return {ok, fmt("%zu rows for %zu (method, T) pairs x %zu samples", rows, seen.size(), test_set.size())};
}

Outcome dictionary_learning() {
  const auto truth = random_dictionary(64, 100, 5001);
  const auto data = planted_signals(truth, 1000, 5, 5002);
  DictLearnOptions opts;
  opts.alpha = 0.1;
  opts.fista_iters = 100;
  opts.train.learning_rate = 2.0;
  opts.train.batch_size = 50;
  opts.train.max_epochs = 20;
  opts.train.seed = 5003;
  const auto r = learn_dictionary(data.signals, random_dictionary(64, 100, 5004), opts);
  double norm_dev = 0.0;
  for (Eigen::Index j = 0; j < r.dictionary.atoms().cols(); ++j)
    norm_dev = std::max(norm_dev, std::abs(r.dictionary.atoms().col(j).norm() - 1.0));
  const double ratio = r.cost_history.back() / r.cost_history.front();
  return {r.cost_history.size() == 21 && ratio <= 0.5 && norm_dev <= 1e-8,
          fmt("cost %.4f -> %.4f after 20 epochs (ratio %.3f), max |col norm - 1| = %.2e", r.cost_history.front(),
              r.cost_history.back(), ratio, norm_dev)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  using nlohmann::json;
  const auto dir = testing::scratch_dir("acceptance_determinism");
  auto planted = [](int seed) {
    return json{{"type", "planted"}, {"rows", 16}, {"atoms", 20}, {"dict_seed", seed},
                {"count", 60},       {"nonzeros", 3}, {"seed", seed + 50}};
  };
  const json source{{"type", "dataset"}, {"path", "codes_a/dataset.json"}, {"split", "test"}};
  const std::vector<std::pair<std::string, json>> steps = {
      {"dict-learn",
       {{"seed", 1},
        {"alpha", 0.05},
        {"fista_iters", 50},
        {"train", {{"learning_rate", 1.0}, {"batch_size", 10}, {"epochs", 2}}},
        {"components", {{{"source", planted(1)}, {"atoms", 20}}, {{"source", planted(2)}, {"atoms", 20}}}}}},
      {"gen-codes",
       {{"seed", 2},
        {"dictionary", "dict-learn_a/dictionary.json"},
        {"method", "SALSA"},
        {"solver", {{"alphas", {0.1, 0.1}}, {"mu", 1.0}, {"max_iters", 100}}},
        {"test_fraction", 0.2},
        {"source", {{"type", "mixture"}, {"count", 50}, {"components", {planted(1), planted(2)}}}}}},
      {"train",
       {{"seed", 3},
        {"dataset", "gen-codes_a/dataset.json"},
        {"dictionary", "dict-learn_a/dictionary.json"},
        {"method", "LSALSA"},
        {"depth", 2},
        {"train", {{"learning_rate", 1e-3}, {"batch_size", 10}, {"epochs", 3}}}}},
      {"grid",
       {{"seed", 4},
        {"dataset", "gen-codes_a/dataset.json"},
        {"dictionary", "dict-learn_a/dictionary.json"},
        {"method", "LISTA"},
        {"learning_rate", {1e-3, 1e-2}},
        {"batch_size", {10}},
        {"epochs", 2},
        {"depth", 2}}},
      {"encode",
       {{"seed", 5},
        {"dictionary", "dict-learn_a/dictionary.json"},
        {"method", "LSALSA"},
        {"model", "train_a/model.json"},
        {"depth", 2},
        {"pgm", {{"rows", 4}, {"cols", 4}, {"limit", 2}}},
        {"source", {{"type", "dataset"}, {"path", "gen-codes_a/dataset.json"}}}}},
      {"separate",
       {{"seed", 6},
        {"dictionary", "dict-learn_a/dictionary.json"},
        {"method", "SALSA"},
        {"depth", 5},
        {"solver", {{"alphas", {0.1, 0.1}}, {"mu", 1.0}}},
        {"source", {{"type", "dataset"}, {"path", "gen-codes_a/dataset.json"}, {"split", "test"}}}}},
      {"bench",
       {{"seed", 7},
        {"dataset", "gen-codes_a/dataset.json"},
        {"dictionary", "dict-learn_a/dictionary.json"},
        {"methods", {"FISTA", "SALSA", "LSALSA"}},
        {"depths", {2}},
        {"models", {{"LSALSA", {{"2", "train_a/model.json"}}}}}}},
      {"diag",
       {{"seed", 8},
        {"dictionary", "dict-learn_a/dictionary.json"},
        {"model", "train_a/model.json"},
        {"source", {{"type", "dataset"}, {"path", "gen-codes_a/dataset.json"}}}}},
  };
  std::size_t compared = 0;
  std::vector<std::string> mismatched;
  for (const auto& [command, cfg] : steps) {
    const auto config = dir / (command + ".json");
    std::ofstream(config) << cfg.dump(2);
    CommandResult runs[2];
    for (int k = 0; k < 2; ++k) {
      CommandOptions opts;
      opts.out = dir / (command + (k ? "_b" : "_a"));
      runs[k] = run_command(command, load_experiment(config, opts));
    }
    if (runs[0].outputs.size() != runs[1].outputs.size()) {
      mismatched.push_back(command + ": output count");
      continue;
    }
    for (std::size_t i = 0; i < runs[0].outputs.size(); ++i) {
      if (runs[0].outputs[i].timing) continue;
      ++compared;
      if (slurp(runs[0].outputs[i].path) != slurp(runs[1].outputs[i].path))
        mismatched.push_back(runs[0].outputs[i].path.filename().string());
    }
  }
  std::string detail = fmt("%zu commands, %zu non-timing files compared", steps.size(), compared);
  for (const auto& m : mismatched) detail += "; differs: " + m;
  return {mismatched.empty() && compared > 0, detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "init equivalence", 5.0, init_equivalence},
      {2, "primal optimality residual", 5.0, theorem1_residual},
      {3, "learned Lagrangian identity", 0.0, learned_lagrangian},
      {4, "unrolled recursion oracle", 0.0, recursion},
      {5, "prox oracle", 0.0, prox_oracle},
      {6, "cross-solver convergence", 10.0, cross_solver},
      {7, "gradient correctness", 30.0, gradients},
      {8, "training acceleration", 600.0, training_acceleration},
      {9, "MCA separation", 900.0, mca_separation},
      {10, "point cloud export", 0.0, point_cloud},
      {11, "dictionary learning", 300.0, dictionary_learning},
      {12, "determinism", 0.0, determinism},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.contains(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_budget = c.budget_s <= 0.0 || secs < c.budget_s;
    const bool pass = o.pass && in_budget;
    if (!pass) ++failures;
    std::cout << (pass ? "PASS" : "FAIL") << "  criterion " << c.id << " (" << c.name << "): " << o.detail
              << fmt(" [%.2f s", secs) << (c.budget_s > 0.0 ? fmt(" / budget %.0f s]", c.budget_s) : std::string("]"))
              << (in_budget ? "" : " OVER BUDGET") << std::endl;
  }
  std::cout << (failures ? "ACCEPTANCE FAILED: " + std::to_string(failures) + " criteria" : std::string("ACCEPTANCE PASSED"))
            << std::endl;
  return failures ? 1 : 0;
}
