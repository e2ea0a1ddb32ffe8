#include "lsalsa/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>

#include "lsalsa/data.hpp"

namespace lsalsa {

void ModelTable::add(Method method, int depth, ModelBundle bundle) {
  models_[{method, depth}] = std::move(bundle);
}

void ModelTable::add_iterative(Method method, ConcatDictionary dict, SolverConfig config) {
  require(!is_learned(method), ErrorCode::UnknownMethod,
          std::string(method_name(method)) + " is not an iterative solver");
  ModelBundle b;
  b.dict = std::move(dict);
  b.config = std::move(config);
  add(method, 0, std::move(b));
}

Encoder ModelTable::encoder(Method method, int depth) const {
  const auto tag = std::string(method_name(method)) + " at T=" + std::to_string(depth);
  auto it = models_.find({method, depth});
  if (it == models_.end() && !is_learned(method)) it = models_.find({method, 0});
  require(it != models_.end(), ErrorCode::MissingModel, "no model for " + tag);

  if (is_learned(method)) {
    auto enc = Encoder::from_bundle(method, it->second);
    require(enc.depth() == depth, ErrorCode::MissingModel,
            "model registered for " + tag + " has depth " + std::to_string(enc.depth()));
    return enc;
  }
  ModelBundle b = it->second;
  require(b.config.has_value(), ErrorCode::MissingModel, "no solver config for " + tag);
  b.config->max_iters = depth;
  b.config->stop_tol = 0.0;
  return Encoder::from_bundle(method, b);
}

GaussianProjection::GaussianProjection(std::size_t dim_in, std::size_t dim_out, std::uint64_t seed) {
  require(dim_out >= 1 && dim_out <= dim_in, ErrorCode::InvalidArgument,
          "projection needs 1 <= dim_out <= dim_in");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim_out));
  g_.resize(static_cast<Eigen::Index>(dim_out), static_cast<Eigen::Index>(dim_in));
  for (Eigen::Index i = 0; i < g_.rows(); ++i)
    for (Eigen::Index j = 0; j < g_.cols(); ++j) g_(i, j) = scale * normal(rng);
}

std::vector<Vector> GaussianProjection::apply(std::span<const Vector> xs) const {
  std::vector<Vector> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(apply(x));
  return out;
}

int ProbeClassifier::predict(const Vector& features) const {
  require(static_cast<std::size_t>(features.size()) == dim(), ErrorCode::ShapeMismatch,
          "feature dimension " + std::to_string(features.size()) + " != classifier dimension " +
              std::to_string(dim()));
  const Vector logits = weights * features + bias;
  int best = 0;
  for (Eigen::Index k = 1; k < logits.size(); ++k)
    if (logits[k] > logits[best]) best = static_cast<int>(k);
  return best;
}

double probe_error(const ProbeClassifier& classifier, std::span<const Vector> features,
                   std::span<const int> labels) {
  require(features.size() == labels.size(), ErrorCode::ShapeMismatch, "one label per feature vector");
  if (features.empty()) return 0.0;
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < features.size(); ++i)
    if (classifier.predict(features[i]) != labels[i]) ++wrong;
  return 100.0 * static_cast<double>(wrong) / static_cast<double>(features.size());
}

ProbeClassifier train_probe(std::span<const Vector> features, std::span<const int> labels, int classes,
                            const ProbeConfig& config) {
  require(classes >= 1, ErrorCode::InvalidArgument, "need at least one class");
  require(!features.empty() && features.size() == labels.size(), ErrorCode::ShapeMismatch,
          "need one label per feature vector");
  const auto dim = features.front().size();
  for (std::size_t i = 0; i < features.size(); ++i) {
    require(features[i].size() == dim, ErrorCode::ShapeMismatch, "ragged feature vectors");
    require(all_finite(features[i]), ErrorCode::InvalidArgument, "non-finite feature");
    require(labels[i] >= 0 && labels[i] < classes, ErrorCode::InvalidArgument,
            "label " + std::to_string(labels[i]) + " out of range");
  }

  ProbeClassifier clf;
  clf.config = config;
  clf.weights = Matrix::Zero(classes, dim);
  clf.bias = Vector::Zero(classes);
  clf.training_error = probe_error(clf, features, labels);

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(features.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  double lr = config.learning_rate;
  for (int epoch = 0; epoch < config.max_epochs && clf.training_error > config.target_error; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (auto i : order) {
      Vector p = clf.weights * features[i] + clf.bias;
      p.array() -= p.maxCoeff();
      p = p.array().exp();
      p /= p.sum();
      p[labels[i]] -= 1.0;
      clf.weights.noalias() -= lr * p * features[i].transpose();
      clf.bias -= lr * p;
    }
    require(all_finite(clf.weights) && all_finite(clf.bias), ErrorCode::DivergedLoss,
            "probe weights became non-finite at epoch " + std::to_string(epoch + 1));
    clf.training_error = probe_error(clf, features, labels);
    lr *= config.lr_decay;
  }
  return clf;
}

BenchmarkResult run_benchmark(std::span<const Method> methods, std::span<const int> depths,
                              std::span<const Example> test_set, const ModelTable& models,
                              const ProbeSetup& probe) {
  require(!test_set.empty(), ErrorCode::EmptySource, "empty test set");
  if (probe.classifier)
    require(probe.labels.size() == test_set.size(), ErrorCode::ShapeMismatch, "one probe label per test sample");

  BenchmarkResult result;
  std::vector<ComponentCode> codes(test_set.size());
  for (auto method : methods) {
    for (int depth : depths) {
      const auto encoder = models.encoder(method, depth);
      const auto start = std::chrono::steady_clock::now();
      for (std::size_t i = 0; i < test_set.size(); ++i) codes[i] = encoder.encode(test_set[i].signal);
      const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

      BenchmarkRecord rec;
      rec.method = method;
      rec.depth = depth;
      rec.setup_seconds = encoder.setup_seconds();
      rec.seconds = std::max(elapsed / static_cast<double>(test_set.size()), 1e-12);
      for (std::size_t i = 0; i < test_set.size(); ++i) {
        const double e = rmse(codes[i].values, test_set[i].target);
        const double s = sparsity(codes[i]);
        rec.rmse += e;
        rec.sparsity += s;
        result.points.push_back({method, depth, i, s, e});
      }
      rec.rmse /= static_cast<double>(test_set.size());
      rec.sparsity /= static_cast<double>(test_set.size());

      if (probe.classifier) {
        std::vector<Vector> features;
        features.reserve(codes.size());
        for (const auto& c : codes)
          features.push_back(probe.projection ? probe.projection->apply(c.values) : c.values);
        rec.classifier_error = probe_error(*probe.classifier, features, probe.labels);
      }
      result.records.push_back(rec);
    }
  }
  return result;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  require(out.is_open(), ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  return out;
}

void check_written(const std::ofstream& out, const std::filesystem::path& path) {
  require(static_cast<bool>(out), ErrorCode::IoError, "failed writing " + path.string());
}

}  // namespace

void write_bench_csv(std::ostream& out, std::span<const BenchmarkRecord> records) {
  out << "# schema=bench-v1\n";
  out << "method,T,rmse,sparsity,seconds,setup_seconds,classifier_error\n";
  out << std::setprecision(17);
  for (const auto& r : records) {
    out << method_name(r.method) << ',' << r.depth << ',' << r.rmse << ',' << r.sparsity << ',' << r.seconds << ','
        << r.setup_seconds << ',';
    if (r.classifier_error) out << *r.classifier_error;
    out << '\n';
  }
}

void write_bench_csv(const std::filesystem::path& path, std::span<const BenchmarkRecord> records) {
  auto out = open_out(path);
  write_bench_csv(out, records);
  check_written(out, path);
}

void export_point_cloud(std::ostream& out, std::span<const SamplePoint> points) {
  out << "# schema=pointcloud-v1\n";
  out << "method,T,sample_id,sparsity,rmse\n";
  out << std::setprecision(17);
  for (const auto& p : points)
    out << method_name(p.method) << ',' << p.depth << ',' << p.sample_id << ',' << p.sparsity << ',' << p.rmse
        << '\n';
}

void export_point_cloud(const std::filesystem::path& path, std::span<const SamplePoint> points) {
  auto out = open_out(path);
  export_point_cloud(out, points);
  check_written(out, path);
}

void dump_patch_pgm(const std::filesystem::path& path, const Vector& patch, std::size_t rows, std::size_t cols) {
  require(static_cast<std::size_t>(patch.size()) == rows * cols, ErrorCode::ShapeMismatch,
          "patch length does not match " + std::to_string(rows) + "x" + std::to_string(cols));
  write_pgm(path, Eigen::Map<const Matrix>(patch.data(), static_cast<Eigen::Index>(rows),
                                           static_cast<Eigen::Index>(cols)));
}

}  // namespace lsalsa
