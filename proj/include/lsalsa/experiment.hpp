#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lsalsa/core.hpp"
#include "lsalsa/training.hpp"

namespace lsalsa {

inline constexpr std::string_view kToolkitVersion = "0.1.0";

/// A dictionary on disk: JSON manifest listing one LSAM file per component.
/// A bare `.lsam` path is read as a single-component dictionary.
void save_dictionary(const ConcatDictionary& dict, const std::filesystem::path& manifest);
ConcatDictionary load_dictionary(const std::filesystem::path& path);

/// Signals plus optimal codes, split into a train prefix and test suffix.
struct Dataset {
  std::vector<Vector> signals;
  std::vector<Vector> codes;
  std::vector<std::vector<Vector>> truth;  // per component, empty when unknown
  Partition partition;
  std::vector<double> alphas;
  double mu = 10.0;
  std::size_t train_count = 0;

  std::vector<Example> examples(bool test) const;
};

void save_dataset(const Dataset& data, const std::filesystem::path& manifest);
Dataset load_dataset(const std::filesystem::path& manifest);

struct CommandOptions {
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  bool quiet = false;
  std::ostream* log = nullptr;
};

/// A parsed experiment config with command-line overrides applied. Relative
/// paths inside the config resolve against `base_dir`.
struct Experiment {
  std::string text;  // canonical JSON after overrides
  std::string name;  // config path, for error messages
  std::filesystem::path base_dir;
  std::filesystem::path out_dir;
  std::uint64_t seed = 0;
  CommandOptions options;
};

Experiment load_experiment(const std::filesystem::path& config, const CommandOptions& options);
Experiment parse_experiment(std::string_view json_text, const std::filesystem::path& base_dir,
                            const CommandOptions& options);

struct OutputFile {
  std::filesystem::path path;
  /// Contains wallclock measurements, so reruns are not byte-identical.
  bool timing = false;
};

struct CommandResult {
  std::vector<OutputFile> outputs;
};

CommandResult cmd_dict_learn(const Experiment& exp);
CommandResult cmd_gen_codes(const Experiment& exp);
CommandResult cmd_train(const Experiment& exp);
CommandResult cmd_encode(const Experiment& exp);
CommandResult cmd_separate(const Experiment& exp);
CommandResult cmd_bench(const Experiment& exp);
CommandResult cmd_grid(const Experiment& exp);
CommandResult cmd_diag(const Experiment& exp);

std::vector<std::string_view> command_names();
/// Dispatches by subcommand name (`dict-learn`, `gen-codes`, ...); throws ConfigError on unknown names.
CommandResult run_command(std::string_view name, const Experiment& exp);

}  // namespace lsalsa
