#include <iostream>
#include <map>
#include <string>

#include <Eigen/Core>

#include "CLI11.hpp"
#include "lsalsa/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Sparse coding and source separation with learned unrolled solvers"};
  app.require_subcommand(1);

  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  int threads = 1;
  bool quiet = false;

  const std::map<std::string, std::string> about = {
      {"dict-learn", "learn component dictionaries from unmixed sources"},
      {"gen-codes", "build a train/test dataset of optimal codes"},
      {"train", "train an LSALSA or LISTA encoder"},
      {"encode", "encode signals with a solver or trained model"},
      {"separate", "separate mixtures into their components"},
      {"bench", "compare methods across iteration depths"},
      {"grid", "grid search over hyperparameters"},
      {"diag", "check a trained LSALSA model against its analytic identities"},
  };

  for (auto name : lsalsa::command_names()) {
    const std::string n(name);
    auto* sub = app.add_subcommand(n, about.contains(n) ? about.at(n) : "");
    sub->add_option("--config", config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory (overrides the config)");
    sub->add_option("--seed", seed, "seed override");
    sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--quiet", quiet, "suppress progress output");
  }

  CLI11_PARSE(app, argc, argv);
  const auto* sub = app.get_subcommands().front();

  lsalsa::CommandOptions opts;
  if (!out.empty()) opts.out = out;
  if (sub->count("--seed") > 0) opts.seed = seed;
  opts.threads = threads;
  opts.quiet = quiet;
  opts.log = &std::cerr;
  Eigen::setNbThreads(threads);

  try {
    const auto exp = lsalsa::load_experiment(config, opts);
    const auto result = lsalsa::run_command(sub->get_name(), exp);
    if (!quiet)
      for (const auto& f : result.outputs) std::cout << f.path.string() << '\n';
  } catch (const lsalsa::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
