#include "lsalsa/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "lsalsa/data.hpp"
#include "lsalsa/diagnostics.hpp"
#include "lsalsa/dictlearn.hpp"
#include "lsalsa/eval.hpp"
#include "lsalsa/lsam.hpp"

namespace lsalsa {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  require(in.is_open(), ErrorCode::IoError, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::FormatError, path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.is_open(), ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out << text;
  require(static_cast<bool>(out), ErrorCode::IoError, "failed writing " + path.string());
}

fs::path sibling(const fs::path& manifest, const std::string& tag) {
  return manifest.parent_path() / (manifest.stem().string() + "." + tag + ".lsam");
}

std::vector<std::size_t> sizes_of(const Partition& p) { return p.sizes(); }

}  // namespace

void save_dictionary(const ConcatDictionary& dict, const fs::path& manifest) {
  json j;
  j["kind"] = "dictionary";
  j["M"] = dict.signal_dim();
  j["partition"] = sizes_of(dict.partition());
  j["files"] = json::array();
  for (std::size_t i = 0; i < dict.components(); ++i) {
    const auto part = sibling(manifest, "part" + std::to_string(i));
    write_lsam(part, dict.parts()[i].atoms());
    j["files"].push_back(part.filename().string());
  }
  write_text(manifest, j.dump(2) + "\n");
}

ConcatDictionary load_dictionary(const fs::path& path) {
  if (path.extension() == ".lsam") return ConcatDictionary(Dictionary(read_lsam(path)));
  const json j = read_json_file(path);
  try {
    require(j.at("kind").get<std::string>() == "dictionary", ErrorCode::FormatError,
            path.string() + " is not a dictionary manifest");
    std::vector<Dictionary> parts;
    for (const auto& f : j.at("files")) parts.emplace_back(read_lsam(path.parent_path() / f.get<std::string>()));
    ConcatDictionary dict(std::move(parts));
    require(dict.partition().sizes() == j.at("partition").get<std::vector<std::size_t>>(), ErrorCode::FormatError,
            path.string() + ": partition disagrees with the part files");
    return dict;
  } catch (const json::exception& e) {
    fail(ErrorCode::FormatError, path.string() + ": " + e.what());
  }
}

std::vector<Example> Dataset::examples(bool test) const {
  std::vector<Example> out;
  const std::size_t begin = test ? train_count : 0;
  const std::size_t end = test ? signals.size() : train_count;
  for (auto i = begin; i < end; ++i) out.push_back({signals[i], codes[i]});
  return out;
}

void save_dataset(const Dataset& data, const fs::path& manifest) {
  require(data.signals.size() == data.codes.size() && !data.signals.empty(), ErrorCode::ShapeMismatch,
          "dataset needs one code per signal");
  json j;
  j["kind"] = "dataset";
  j["M"] = data.signals.front().size();
  j["N"] = data.codes.front().size();
  j["count"] = data.signals.size();
  j["train_count"] = data.train_count;
  j["partition"] = sizes_of(data.partition);
  j["alphas"] = data.alphas;
  j["mu"] = data.mu;
  const auto sig = sibling(manifest, "signals");
  const auto cod = sibling(manifest, "codes");
  write_lsam(sig, rows_from(data.signals));
  write_lsam(cod, rows_from(data.codes));
  j["files"] = {{"signals", sig.filename().string()}, {"codes", cod.filename().string()}};
  j["files"]["truth"] = json::array();
  for (std::size_t i = 0; i < data.truth.size(); ++i) {
    const auto t = sibling(manifest, "truth" + std::to_string(i));
    write_lsam(t, rows_from(data.truth[i]));
    j["files"]["truth"].push_back(t.filename().string());
  }
  write_text(manifest, j.dump(2) + "\n");
}

Dataset load_dataset(const fs::path& manifest) {
  const json j = read_json_file(manifest);
  const auto dir = manifest.parent_path();
  try {
    require(j.at("kind").get<std::string>() == "dataset", ErrorCode::FormatError,
            manifest.string() + " is not a dataset manifest");
    Dataset d;
    d.signals = rows_of(read_lsam(dir / j.at("files").at("signals").get<std::string>()));
    d.codes = rows_of(read_lsam(dir / j.at("files").at("codes").get<std::string>()));
    for (const auto& t : j.at("files").at("truth")) d.truth.push_back(rows_of(read_lsam(dir / t.get<std::string>())));
    d.partition = Partition(j.at("partition").get<std::vector<std::size_t>>());
    d.alphas = j.at("alphas").get<std::vector<double>>();
    d.mu = j.at("mu").get<double>();
    d.train_count = j.at("train_count").get<std::size_t>();
    require(d.signals.size() == d.codes.size() && d.signals.size() == j.at("count").get<std::size_t>() &&
                d.train_count <= d.signals.size(),
            ErrorCode::FormatError, manifest.string() + ": row counts disagree with the manifest");
    for (const auto& t : d.truth)
      require(t.size() == d.signals.size(), ErrorCode::FormatError, manifest.string() + ": truth row count");
    return d;
  } catch (const json::exception& e) {
    fail(ErrorCode::FormatError, manifest.string() + ": " + e.what());
  }
}

namespace {

/// Typed access to a config subtree; failures become ConfigError naming the field.
class Cfg {
 public:
  Cfg(const json& node, std::string path, const Experiment& exp) : node_(node), path_(std::move(path)), exp_(exp) {}

  bool has(const std::string& key) const { return node_.is_object() && node_.contains(key) && !node_[key].is_null(); }

  Cfg at(const std::string& key) const {
    if (!has(key)) error(key, "is required");
    return Cfg(node_[key], field(key), exp_);
  }

  Cfg at(std::size_t i) const { return Cfg(node_.at(i), path_ + "[" + std::to_string(i) + "]", exp_); }

  template <typename T>
  T get() const {
    try {
      return node_.get<T>();
    } catch (const json::exception&) {
      fail(ErrorCode::ConfigError, exp_.name + ": field '" + path_ + "' has the wrong type");
    }
  }

  template <typename T>
  T get(const std::string& key) const {
    return at(key).get<T>();
  }

  template <typename T>
  T get(const std::string& key, T fallback) const {
    return has(key) ? at(key).get<T>() : fallback;
  }

  std::size_t size() const { return node_.is_array() ? node_.size() : 0; }
  bool is_array() const { return node_.is_array(); }
  bool is_object() const { return node_.is_object(); }
  const json& raw() const { return node_; }
  const std::string& path() const { return path_; }

  fs::path path_value(const std::string& key) const {
    fs::path p = get<std::string>(key);
    if (p.is_relative()) p = exp_.base_dir / p;
    if (!fs::exists(p)) error(key, "refers to missing path " + p.string());
    return p;
  }

  Method method(const std::string& key) const { return at(key).as_method(); }

  Method as_method() const {
    const auto name = get<std::string>();
    try {
      return parse_method(name);
    } catch (const Error&) {
      fail(ErrorCode::ConfigError, exp_.name + ": field '" + path_ + "': unknown method '" + name + "'");
    }
  }

  Method method_key(const std::string& key) const {
    try {
      return parse_method(key);
    } catch (const Error&) {
      error(key, "is not a known method");
    }
  }

  int depth_key(const std::string& key) const {
    int t = 0;
    const auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), t);
    if (ec != std::errc() || ptr != key.data() + key.size() || t < 1) error(key, "is not a depth");
    return t;
  }

  [[noreturn]] void error(const std::string& key, const std::string& what) const {
    fail(ErrorCode::ConfigError, exp_.name + ": field '" + field(key) + "' " + what);
  }
  [[noreturn]] void error(const std::string& what) const {
    fail(ErrorCode::ConfigError, exp_.name + ": field '" + path_ + "' " + what);
  }

 private:
  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json& node_;
  std::string path_;
  const Experiment& exp_;
};

struct Loaded {
  std::vector<Vector> signals;
  std::vector<std::vector<Vector>> truth;
};

void log(const Experiment& exp, const std::string& msg) {
  if (!exp.options.quiet && exp.options.log) *exp.options.log << msg << '\n';
}

std::vector<Vector> image_patches(const std::vector<Image>& images, const Cfg& src) {
  PatchSpec spec;
  std::optional<std::pair<std::size_t, std::size_t>> resize;
  if (src.has("resize")) {
    const auto r = src.get<std::vector<std::size_t>>("resize");
    if (r.size() != 2) src.error("resize", "must be [rows, cols]");
    resize = {r[0], r[1]};
  }
  const bool tiled = src.has("patch");
  if (tiled) {
    const auto p = src.get<std::vector<std::size_t>>("patch");
    if (p.size() != 2) src.error("patch", "must be [height, width]");
    spec.patch_h = p[0];
    spec.patch_w = p[1];
    if (src.has("min_std")) spec.min_std = src.get<double>("min_std");
  }
  std::vector<Vector> out;
  for (const auto& raw : images) {
    const Image img = resize ? resize_bilinear(raw, resize->first, resize->second) : raw;
    if (!tiled) {
      out.emplace_back(Eigen::Map<const Vector>(img.data(), img.size()));
      continue;
    }
    auto patches = extract_patches(img, spec);
    std::move(patches.begin(), patches.end(), std::back_inserter(out));
  }
  return out;
}

Loaded load_source(const Cfg& src, const Experiment& exp);

Loaded load_source(const Cfg& src, const Experiment& exp) {
  if (!src.is_object()) src.error("must be an object with a 'type'");
  const auto type = src.get<std::string>("type");
  Loaded out;
  if (type == "lsam") {
    out.signals = rows_of(read_lsam(src.path_value("path")));
  } else if (type == "idx") {
    auto set = import_idx_images(src.path_value("path"));
    const auto limit = src.get<std::size_t>("limit", set.images.size());
    if (limit < set.images.size()) set.images.resize(limit);
    out.signals = image_patches(set.images, src);
  } else if (type == "pgm") {
    const auto paths = src.at("paths");
    std::vector<Image> images;
    for (std::size_t i = 0; i < paths.size(); ++i) {
      fs::path p = paths.at(i).get<std::string>();
      if (p.is_relative()) p = exp.base_dir / p;
      images.push_back(read_pgm(p));
    }
    out.signals = image_patches(images, src);
  } else if (type == "planted") {
    const Dictionary dict = src.has("dictionary")
                                ? Dictionary(load_dictionary(src.path_value("dictionary")).matrix())
                                : random_dictionary(src.get<std::size_t>("rows"), src.get<std::size_t>("atoms"),
                                                    src.get<std::uint64_t>("dict_seed"));
    out.signals = planted_signals(dict, src.get<std::size_t>("count"), src.get<std::size_t>("nonzeros"),
                                  src.get<std::uint64_t>("seed", exp.seed))
                      .signals;
  } else if (type == "mixture") {
    const auto parts = src.at("components");
    if (parts.size() != 2) src.error("components", "must list exactly two sources");
    const auto a = load_source(parts.at(0), exp);
    const auto b = load_source(parts.at(1), exp);
    auto mix = make_mixtures(a.signals, b.signals, src.get<std::size_t>("count"),
                             src.get<std::uint64_t>("seed", exp.seed));
    out.truth.resize(2);
    for (auto& s : mix.mixtures) {
      out.truth[0].push_back(s.component_truth[0]);
      out.truth[1].push_back(s.component_truth[1]);
      out.signals.push_back(std::move(s.data));
    }
  } else if (type == "dataset") {
    const auto d = load_dataset(src.path_value("path"));
    const auto split = src.get<std::string>("split", "all");
    std::size_t begin = 0, end = d.signals.size();
    if (split == "train") {
      end = d.train_count;
    } else if (split == "test") {
      begin = d.train_count;
    } else if (split != "all") {
      src.error("split", "must be train, test or all");
    }
    out.signals.assign(d.signals.begin() + begin, d.signals.begin() + end);
    for (const auto& t : d.truth) out.truth.emplace_back(t.begin() + begin, t.begin() + end);
  } else {
    src.error("type", "unknown source type '" + type + "'");
  }
  if (out.signals.empty()) fail(ErrorCode::EmptySource, exp.name + ": source '" + src.path() + "' yielded no signals");
  return out;
}

TrainConfig train_config(const Cfg& root, const Experiment& exp, bool allow_zero_epochs = false) {
  TrainConfig t;
  t.seed = exp.seed;
  if (!root.has("train")) return t;
  const auto c = root.at("train");
  t.learning_rate = c.get<double>("learning_rate", t.learning_rate);
  t.lr_decay = c.get<double>("lr_decay", t.lr_decay);
  t.batch_size = c.get<int>("batch_size", t.batch_size);
  t.max_epochs = c.get<int>("epochs", t.max_epochs);
  t.rel_cost_tol = c.get<double>("rel_cost_tol", t.rel_cost_tol);
  t.learn_theta = c.get<bool>("learn_theta", t.learn_theta);
  try {
    auto checked = t;
    if (allow_zero_epochs && checked.max_epochs == 0) checked.max_epochs = 1;
    checked.validate();
  } catch (const Error& e) {
    c.error(e.message());
  }
  return t;
}

SolverConfig solver_config(const Cfg& root, std::vector<double> alphas, double mu, int max_iters, double stop_tol) {
  SolverConfig s;
  s.alphas = std::move(alphas);
  s.mu = mu;
  s.max_iters = max_iters;
  s.stop_tol = stop_tol;
  if (root.has("solver")) {
    const auto c = root.at("solver");
    s.alphas = c.get<std::vector<double>>("alphas", s.alphas);
    s.mu = c.get<double>("mu", s.mu);
    s.max_iters = c.get<int>("max_iters", s.max_iters);
    s.stop_tol = c.get<double>("stop_tol", s.stop_tol);
    s.emit_thresholded = c.get<bool>("emit_thresholded", s.emit_thresholded);
  }
  return s;
}

/// Splits off a seeded validation subset from the training examples.
std::pair<std::vector<Example>, std::vector<Example>> split_validation(std::vector<Example> all, double fraction,
                                                                       std::uint64_t seed) {
  require(fraction >= 0.0 && fraction < 1.0, ErrorCode::ConfigError, "validation_fraction must be in [0, 1)");
  std::mt19937_64 rng(seed);
  std::shuffle(all.begin(), all.end(), rng);
  const auto n_val = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(all.size())));
  std::vector<Example> val(all.end() - static_cast<std::ptrdiff_t>(n_val), all.end());
  all.resize(all.size() - n_val);
  return {std::move(all), std::move(val)};
}

class Outputs {
 public:
  explicit Outputs(const Experiment& exp) : exp_(exp) { fs::create_directories(exp.out_dir); }

  fs::path path(const std::string& name) const { return exp_.out_dir / name; }
  void add(const fs::path& p, bool timing = false) { result_.outputs.push_back({p, timing}); }
  /// Adds the file together with any LSAM siblings written next to it.
  void add_with_siblings(const fs::path& manifest) {
    add(manifest);
    std::vector<fs::path> extra;
    for (const auto& entry : fs::directory_iterator(manifest.parent_path())) {
      const auto name = entry.path().filename().string();
      if (name.starts_with(manifest.stem().string() + ".") && entry.path().extension() == ".lsam")
        extra.push_back(entry.path());
    }
    std::sort(extra.begin(), extra.end());
    for (auto& p : extra) add(p);
  }

  CommandResult finish(std::string_view command) {
    json m;
    m["command"] = command;
    m["toolkit_version"] = kToolkitVersion;
    m["config_digest"] = hex_digest(fnv1a64(exp_.text));
    m["seed"] = exp_.seed;
    m["outputs"] = json::array();
    for (const auto& o : result_.outputs) {
      json f;
      f["file"] = fs::relative(o.path, exp_.out_dir).generic_string();
      f["timing"] = o.timing;
      if (!o.timing) f["digest"] = file_digest(o.path);
      m["outputs"].push_back(f);
    }
    const auto manifest = path("run_manifest.json");
    write_text(manifest, m.dump(2) + "\n");
    add(manifest);
    return result_;
  }

 private:
  const Experiment& exp_;
  CommandResult result_;
};

std::string csv_number(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

Experiment parse_experiment(std::string_view json_text, const fs::path& base_dir, const CommandOptions& options) {
  Experiment exp;
  exp.name = "<config>";
  exp.base_dir = base_dir;
  exp.options = options;
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(ErrorCode::ConfigError, std::string("config is not valid JSON: ") + e.what());
  }
  require(j.is_object(), ErrorCode::ConfigError, "config must be a JSON object");
  if (options.seed) j["seed"] = *options.seed;
  require(j.contains("seed") && j["seed"].is_number_unsigned(), ErrorCode::ConfigError,
          "field 'seed' is required (non-negative integer)");
  exp.seed = j["seed"].get<std::uint64_t>();
  if (options.out) {
    exp.out_dir = *options.out;
  } else if (j.contains("out") && j["out"].is_string()) {
    exp.out_dir = j["out"].get<std::string>();
    if (exp.out_dir.is_relative()) exp.out_dir = base_dir / exp.out_dir;
  } else {
    exp.out_dir = base_dir / "out";
  }
  j.erase("out");
  exp.text = j.dump();
  return exp;
}

Experiment load_experiment(const fs::path& config, const CommandOptions& options) {
  std::ifstream in(config);
  require(in.is_open(), ErrorCode::ConfigError, "cannot open config " + config.string());
  std::stringstream buf;
  buf << in.rdbuf();
  auto base = config.parent_path();
  if (base.empty()) base = ".";
  auto exp = parse_experiment(buf.str(), base, options);
  exp.name = config.string();
  return exp;
}

namespace {

json root_json(const Experiment& exp) { return json::parse(exp.text); }

}  // namespace

CommandResult cmd_dict_learn(const Experiment& exp) {
  const json doc = root_json(exp);
  const Cfg root(doc, "", exp);
  DictLearnOptions opts;
  opts.train = train_config(root, exp, true);
  opts.alpha = root.get<double>("alpha", opts.alpha);
  opts.fista_iters = root.get<int>("fista_iters", opts.fista_iters);

  const auto comps = root.at("components");
  if (comps.size() == 0) comps.error("must list at least one component");
  Outputs out(exp);
  std::vector<Dictionary> parts;
  std::ostringstream costs;
  costs << "component,epoch,cost\n";
  for (std::size_t i = 0; i < comps.size(); ++i) {
    const auto c = comps.at(i);
    const auto data = load_source(c.at("source"), exp);
    const auto init = random_dictionary(static_cast<std::size_t>(data.signals.front().size()),
                                        c.get<std::size_t>("atoms"), c.get<std::uint64_t>("init_seed", exp.seed + i));
    log(exp, "dict-learn: component " + std::to_string(i) + " on " + std::to_string(data.signals.size()) +
                 " signals");
    auto component_opts = opts;
    component_opts.train.seed = exp.seed + i;
    auto learned = learn_dictionary(data.signals, init, component_opts);
    for (std::size_t e = 0; e < learned.cost_history.size(); ++e)
      costs << i << ',' << e << ',' << csv_number(learned.cost_history[e]) << '\n';
    parts.push_back(std::move(learned.dictionary));
  }
  const auto manifest = out.path("dictionary.json");
  save_dictionary(ConcatDictionary(std::move(parts)), manifest);
  out.add_with_siblings(manifest);
  write_text(out.path("dictlearn_cost.csv"), costs.str());
  out.add(out.path("dictlearn_cost.csv"));
  return out.finish("dict-learn");
}

CommandResult cmd_gen_codes(const Experiment& exp) {
  const json doc = root_json(exp);
  const Cfg root(doc, "", exp);
  const auto dict = load_dictionary(root.path_value("dictionary"));
  const auto method_cfg = root.at("method");
  const Method m = method_cfg.as_method();
  if (m != Method::FISTA && m != Method::SALSA) method_cfg.error("must be FISTA or SALSA for optimal codes");
  const int default_iters = m == Method::FISTA ? kDefaultFistaCodeIters : kDefaultSalsaCodeIters;
  const auto config = solver_config(root, std::vector<double>(dict.components(), 0.1), 10.0, default_iters, 0.0);
  if (config.alphas.size() != dict.components()) root.error("solver", "needs one alpha per dictionary component");

  const auto data = load_source(root.at("source"), exp);
  log(exp, "gen-codes: coding " + std::to_string(data.signals.size()) + " signals with " +
               std::string(method_name(m)) + "-" + std::to_string(config.max_iters));
  const auto codes =
      generate_optimal_codes(data.signals, dict, config, m == Method::FISTA ? CodeMethod::FISTA : CodeMethod::SALSA);

  Dataset ds;
  ds.signals = data.signals;
  for (const auto& c : codes.codes) ds.codes.push_back(c.values);
  ds.truth = data.truth;
  ds.partition = dict.partition();
  ds.alphas = config.alphas;
  ds.mu = config.mu;
  const double test_fraction = root.get<double>("test_fraction", 0.0);
  if (test_fraction < 0.0 || test_fraction >= 1.0) root.error("test_fraction", "must be in [0, 1)");
  ds.train_count = ds.signals.size() -
                   static_cast<std::size_t>(std::floor(test_fraction * static_cast<double>(ds.signals.size())));

  Outputs out(exp);
  const auto manifest = out.path("dataset.json");
  save_dataset(ds, manifest);
  out.add_with_siblings(manifest);
  json summary;
  summary["method"] = method_name(m);
  summary["max_iters"] = config.max_iters;
  summary["mean_sparsity"] = codes.mean_sparsity;
  write_text(out.path("codes_summary.json"), summary.dump(2) + "\n");
  out.add(out.path("codes_summary.json"));
  return out.finish("gen-codes");
}

CommandResult cmd_train(const Experiment& exp) {
  const json doc = root_json(exp);
  const Cfg root(doc, "", exp);
  const auto method_cfg = root.at("method");
  const Method m = method_cfg.as_method();
  if (!is_learned(m)) method_cfg.error("must be LSALSA or LISTA");
  const auto ds = load_dataset(root.path_value("dataset"));
  const auto dict = load_dictionary(root.path_value("dictionary"));
  const auto alphas = root.get<std::vector<double>>("alphas", ds.alphas);
  const double mu = root.get<double>("mu", ds.mu);
  const int depth = root.get<int>("depth");
  const auto cfg = train_config(root, exp);
  auto [train_set, val_set] = split_validation(ds.examples(false), root.get<double>("validation_fraction", 0.1), exp.seed);
  require(!train_set.empty(), ErrorCode::EmptySource, "training split is empty");
  log(exp, "train: " + std::string(method_name(m)) + " T=" + std::to_string(depth) + " on " +
               std::to_string(train_set.size()) + " examples");

  Outputs out(exp);
  const auto manifest = out.path("model.json");
  std::vector<EpochRecord> history;
  if (m == Method::LSALSA) {
    auto r = train(lsalsa_init(dict, alphas, mu, depth), train_set, cfg, val_set);
    save_params(r.params, manifest);
    history = std::move(r.history);
  } else {
    auto r = train(lista_init(dict, alphas, depth), train_set, cfg, val_set);
    save_params(r.params, manifest);
    history = std::move(r.history);
  }
  out.add_with_siblings(manifest);
  std::ofstream csv(out.path("loss_history.csv"));
  write_loss_history_csv(csv, history);
  csv.close();
  out.add(out.path("loss_history.csv"));
  return out.finish("train");
}

CommandResult cmd_grid(const Experiment& exp) {
  const json doc = root_json(exp);
  const Cfg root(doc, "", exp);
  const Method m = root.method("method");
  const auto ds = load_dataset(root.path_value("dataset"));
  const auto dict = load_dictionary(root.path_value("dictionary"));
  GridSpec g;
  g.alphas = root.get<std::vector<std::vector<double>>>("alphas", {ds.alphas});
  g.mu = root.get<std::vector<double>>("mu", {ds.mu});
  g.batch_size = root.get<std::vector<int>>("batch_size", g.batch_size);
  g.learning_rate = root.get<std::vector<double>>("learning_rate", g.learning_rate);
  g.lr_decay = root.get<std::vector<double>>("lr_decay", g.lr_decay);
  g.epochs = root.get<int>("epochs", g.epochs);
  g.depth = root.get<int>("depth", g.depth);
  g.seed = exp.seed;
  try {
    g.validate();
  } catch (const Error& e) {
    root.error(e.message());
  }
  auto [train_set, val_set] = split_validation(ds.examples(false), root.get<double>("validation_fraction", 0.1), exp.seed);
  if (val_set.empty()) val_set = train_set;
  log(exp, "grid: " + std::string(method_name(m)) + " T=" + std::to_string(g.depth));
  const auto result = grid_search(train_set, val_set, dict, g, m);

  Outputs out(exp);
  std::ofstream csv(out.path("leaderboard.csv"));
  write_leaderboard_csv(csv, result);
  csv.close();
  out.add(out.path("leaderboard.csv"));
  return out.finish("grid");
}

namespace {

/// Encoder for method/depth from a config that names a model (learned) or a dictionary + solver block.
Encoder encoder_from(const Cfg& root, Method m, int depth, const std::optional<ConcatDictionary>& dict) {
  if (is_learned(m)) {
    const auto path = root.path_value("model");
    if (m == Method::LSALSA) {
      auto p = load_lsalsa(path);
      if (p.depth != depth) root.error("depth", "does not match the model depth " + std::to_string(p.depth));
      return Encoder::lsalsa(std::move(p));
    }
    auto p = load_lista(path);
    if (p.depth != depth) root.error("depth", "does not match the model depth " + std::to_string(p.depth));
    return Encoder::lista(std::move(p));
  }
  if (!dict) root.error("dictionary", "is required for iterative methods");
  auto config = solver_config(root, std::vector<double>(dict->components(), 0.1), 10.0, depth, 0.0);
  config.max_iters = depth;
  config.stop_tol = 0.0;
  return Encoder::iterative(m, *dict, config);
}

struct PgmDump {
  std::size_t rows = 0, cols = 0, limit = 0;
};

std::optional<PgmDump> pgm_dump(const Cfg& root) {
  if (!root.has("pgm")) return std::nullopt;
  const auto c = root.at("pgm");
  return PgmDump{c.get<std::size_t>("rows"), c.get<std::size_t>("cols"), c.get<std::size_t>("limit", 16)};
}

}  // namespace

CommandResult cmd_encode(const Experiment& exp) {
  const json doc = root_json(exp);
  const Cfg root(doc, "", exp);
  const Method m = root.method("method");
  const int depth = root.get<int>("depth");
  std::optional<ConcatDictionary> dict;
  if (root.has("dictionary")) dict = load_dictionary(root.path_value("dictionary"));
  const auto enc = encoder_from(root, m, depth, dict);
  const auto data = load_source(root.at("source"), exp);
  log(exp, "encode: " + std::to_string(data.signals.size()) + " signals");

  Outputs out(exp);
  std::vector<Vector> codes, recons;
  for (const auto& y : data.signals) codes.push_back(enc.encode(y).values);
  write_lsam(out.path("codes.lsam"), rows_from(codes));
  out.add(out.path("codes.lsam"));
  if (dict) {
    for (const auto& x : codes) recons.push_back(dict->matrix() * x);
    write_lsam(out.path("reconstruction.lsam"), rows_from(recons));
    out.add(out.path("reconstruction.lsam"));
    if (const auto pgm = pgm_dump(root)) {
      for (std::size_t k = 0; k < std::min(pgm->limit, recons.size()); ++k) {
        const auto p = out.path("recon_" + std::to_string(k) + ".pgm");
        dump_patch_pgm(p, recons[k], pgm->rows, pgm->cols);
        out.add(p);
      }
    }
  }
  return out.finish("encode");
}

CommandResult cmd_separate(const Experiment& exp) {
  const json doc = root_json(exp);
  const Cfg root(doc, "", exp);
  const Method m = root.method("method");
  const int depth = root.get<int>("depth");
  const auto dict = load_dictionary(root.path_value("dictionary"));
  if (dict.components() < 2) root.error("dictionary", "must have at least two components to separate");
  const auto enc = encoder_from(root, m, depth, dict);
  const auto data = load_source(root.at("source"), exp);
  const bool have_truth = data.truth.size() == dict.components();
  log(exp, "separate: " + std::to_string(data.signals.size()) + " mixtures");

  Outputs out(exp);
  const auto pgm = pgm_dump(root);
  std::vector<Vector> codes;
  std::vector<std::vector<Vector>> comps(dict.components());
  std::vector<double> mean_rmse(dict.components(), 0.0);
  std::ostringstream csv;
  csv << "sample_id,component,rmse\n";
  for (std::size_t k = 0; k < data.signals.size(); ++k) {
    ComponentCode code(enc.encode(data.signals[k]).values, dict.partition());
    const auto rec = reconstruct(code, dict);
    for (std::size_t i = 0; i < dict.components(); ++i) {
      comps[i].push_back(rec.components[i]);
      if (have_truth) {
        const double e = rmse(rec.components[i], data.truth[i][k]);
        mean_rmse[i] += e;
        csv << k << ',' << i << ',' << csv_number(e) << '\n';
      }
      if (pgm && k < pgm->limit) {
        const auto p = out.path("component" + std::to_string(i) + "_" + std::to_string(k) + ".pgm");
        dump_patch_pgm(p, rec.components[i], pgm->rows, pgm->cols);
        out.add(p);
      }
    }
    codes.push_back(std::move(code.values));
  }
  write_lsam(out.path("codes.lsam"), rows_from(codes));
  out.add(out.path("codes.lsam"));
  for (std::size_t i = 0; i < dict.components(); ++i) {
    const auto p = out.path("component" + std::to_string(i) + ".lsam");
    write_lsam(p, rows_from(comps[i]));
    out.add(p);
  }
  if (have_truth) {
    write_text(out.path("separation.csv"), csv.str());
    out.add(out.path("separation.csv"));
    json summary;
    for (auto& v : mean_rmse) v /= static_cast<double>(data.signals.size());
    summary["mean_component_rmse"] = mean_rmse;
    write_text(out.path("separation.json"), summary.dump(2) + "\n");
    out.add(out.path("separation.json"));
  }
  return out.finish("separate");
}

CommandResult cmd_bench(const Experiment& exp) {
  const json doc = root_json(exp);
  const Cfg root(doc, "", exp);
  const auto ds = load_dataset(root.path_value("dataset"));
  const auto split = root.get<std::string>("split", "test");
  if (split != "test" && split != "train") root.error("split", "must be train or test");
  const auto test = ds.examples(split == "test");
  if (test.empty()) root.error("split", "selects no samples");

  std::vector<Method> methods;
  const auto mcfg = root.at("methods");
  for (std::size_t i = 0; i < mcfg.size(); ++i) methods.push_back(mcfg.at(i).as_method());
  const auto depths = root.get<std::vector<int>>("depths");

  ModelTable table;
  std::optional<ConcatDictionary> dict;
  if (root.has("dictionary")) dict = load_dictionary(root.path_value("dictionary"));
  for (auto m : methods) {
    if (!is_learned(m)) {
      if (!dict) root.error("dictionary", "is required for iterative methods");
      table.add_iterative(m, *dict, solver_config(root, ds.alphas, ds.mu, 1, 0.0));
    }
  }
  if (root.has("models")) {
    const auto models = root.at("models");
    for (const auto& [name, per_depth] : models.raw().items()) {
      const Method m = models.method_key(name);
      const auto mc = models.at(name);
      for (const auto& [t, _] : per_depth.items()) {
        ModelBundle b;
        const auto path = mc.path_value(t);
        if (m == Method::LSALSA) {
          b.lsalsa = load_lsalsa(path);
        } else if (m == Method::LISTA) {
          b.lista = load_lista(path);
        } else {
          mc.error("only LSALSA and LISTA take trained models");
        }
        table.add(m, mc.depth_key(t), std::move(b));
      }
    }
  }

  std::optional<ProbeClassifier> clf;
  std::optional<GaussianProjection> proj;
  std::vector<int> labels;
  ProbeSetup probe;
  if (root.has("probe")) {
    const auto pc = root.at("probe");
    const auto lp = pc.path_value("labels");
    if (lp.extension() == ".lsam") {
      const auto mat = read_lsam(lp);
      for (Eigen::Index i = 0; i < mat.rows(); ++i) labels.push_back(static_cast<int>(std::lround(mat(i, 0))));
    } else {
      for (auto v : import_idx_labels(lp)) labels.push_back(v);
    }
    if (labels.size() != test.size()) pc.error("labels", "must hold one label per benchmark sample");
    std::vector<Vector> features;
    for (const auto& e : test) features.push_back(e.target);
    if (pc.has("projection_dim")) {
      proj.emplace(static_cast<std::size_t>(features.front().size()), pc.get<std::size_t>("projection_dim"), exp.seed);
      features = proj->apply(features);
    }
    ProbeConfig pcfg;
    pcfg.seed = exp.seed;
    pcfg.target_error = pc.get<double>("target_error", pcfg.target_error);
    pcfg.max_epochs = pc.get<int>("max_epochs", pcfg.max_epochs);
    const int classes = pc.get<int>("classes", *std::max_element(labels.begin(), labels.end()) + 1);
    clf = train_probe(features, labels, classes, pcfg);
    probe = {&*clf, proj ? &*proj : nullptr, labels};
  }

  log(exp, "bench: " + std::to_string(methods.size()) + " methods x " + std::to_string(depths.size()) +
               " depths on " + std::to_string(test.size()) + " samples");
  const auto result = run_benchmark(methods, depths, test, table, probe);
  Outputs out(exp);
  write_bench_csv(out.path("bench.csv"), result.records);
  out.add(out.path("bench.csv"), true);
  if (root.get<bool>("point_cloud", true)) {
    export_point_cloud(out.path("point_cloud.csv"), result.points);
    out.add(out.path("point_cloud.csv"));
  }
  return out.finish("bench");
}

CommandResult cmd_diag(const Experiment& exp) {
  const json doc = root_json(exp);
  const Cfg root(doc, "", exp);
  const auto dict = load_dictionary(root.path_value("dictionary"));
  LsalsaParams params;
  if (root.has("model")) {
    params = load_lsalsa(root.path_value("model"));
  } else {
    const auto cfg = solver_config(root, std::vector<double>(dict.components(), 0.1), 10.0, 1, 0.0);
    params = lsalsa_init(dict, cfg.alphas, cfg.mu, root.get<int>("depth", 3));
  }
  auto data = load_source(root.at("source"), exp);
  const auto count = root.get<std::size_t>("count", 20);
  if (data.signals.size() > count) data.signals.resize(count);
  const auto report = run_diagnostics(params, dict, data.signals, exp.seed);

  Outputs out(exp);
  write_text(out.path("diagnostics.json"), to_json(report) + "\n");
  out.add(out.path("diagnostics.json"));
  return out.finish("diag");
}

std::vector<std::string_view> command_names() {
  return {"dict-learn", "gen-codes", "train", "encode", "separate", "bench", "grid", "diag"};
}

CommandResult run_command(std::string_view name, const Experiment& exp) {
  using Fn = CommandResult (*)(const Experiment&);
  static const std::pair<std::string_view, Fn> table[] = {
      {"dict-learn", cmd_dict_learn}, {"gen-codes", cmd_gen_codes}, {"train", cmd_train},
      {"encode", cmd_encode},         {"separate", cmd_separate},   {"bench", cmd_bench},
      {"grid", cmd_grid},             {"diag", cmd_diag},
  };
  for (const auto& [n, fn] : table) {
    if (n != name) continue;
    try {
      return fn(exp);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::ConfigError) throw;
      fail(e.code(), std::string(name) + ": " + e.message());
    }
  }
  fail(ErrorCode::ConfigError, "unknown command '" + std::string(name) + "'");
}

}  // namespace lsalsa
