#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>

#include "lsalsa/encoder.hpp"
#include "lsalsa/training.hpp"

namespace lsalsa {

struct BenchmarkRecord {
  Method method = Method::SALSA;
  int depth = 0;
  double rmse = 0.0;
  double sparsity = 0.0;
  /// Mean per-sample inference wallclock; setup is reported separately.
  double seconds = 0.0;
  double setup_seconds = 0.0;
  std::optional<double> classifier_error;
};

/// One point of the sparsity/accuracy cloud.
struct SamplePoint {
  Method method = Method::SALSA;
  int depth = 0;
  std::size_t sample_id = 0;
  double sparsity = 0.0;
  double rmse = 0.0;
};

/// Models keyed by (method, T). Iterative methods may register a single
/// entry under T = 0 that serves every depth (max_iters is overridden).
class ModelTable {
 public:
  void add(Method method, int depth, ModelBundle bundle);
  void add_iterative(Method method, ConcatDictionary dict, SolverConfig config);
  /// Encoder for exactly `depth` iterations/layers; throws MissingModel.
  Encoder encoder(Method method, int depth) const;

 private:
  std::map<std::pair<Method, int>, ModelBundle> models_;
};

class GaussianProjection {
 public:
  /// Entries i.i.d. N(0, 1) / sqrt(dim_out) from mt19937_64(seed).
  GaussianProjection(std::size_t dim_in, std::size_t dim_out, std::uint64_t seed);

  const Matrix& matrix() const { return g_; }
  Vector apply(const Vector& x) const { return g_ * x; }
  std::vector<Vector> apply(std::span<const Vector> xs) const;

 private:
  Matrix g_;
};

struct ProbeConfig {
  double learning_rate = 0.1;
  double lr_decay = 0.9;
  int max_epochs = 500;
  /// Stop once training error (percent) is at or below this.
  double target_error = 0.0;
  std::uint64_t seed = 0;
};

struct ProbeClassifier {
  Matrix weights;  // classes x dim
  Vector bias;
  ProbeConfig config;
  double training_error = 100.0;

  std::size_t classes() const { return static_cast<std::size_t>(weights.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(weights.cols()); }
  /// argmax of the logits, ties toward the lower class index.
  int predict(const Vector& features) const;
};

/// Multinomial logistic regression by per-sample SGD on softmax cross-entropy.
ProbeClassifier train_probe(std::span<const Vector> features, std::span<const int> labels, int classes,
                            const ProbeConfig& config = {});

/// Misclassification rate in percent.
double probe_error(const ProbeClassifier& classifier, std::span<const Vector> features, std::span<const int> labels);

/// Optional downstream classification attached to a benchmark.
struct ProbeSetup {
  const ProbeClassifier* classifier = nullptr;
  const GaussianProjection* projection = nullptr;
  std::span<const int> labels;
};

struct BenchmarkResult {
  std::vector<BenchmarkRecord> records;
  std::vector<SamplePoint> points;
};

/// Encodes every test signal with each (method, T), exactly T iterations, and
/// aggregates RMSE to the targets, sparsity and per-sample wallclock.
BenchmarkResult run_benchmark(std::span<const Method> methods, std::span<const int> depths,
                              std::span<const Example> test_set, const ModelTable& models,
                              const ProbeSetup& probe = {});

/// `# schema=bench-v1` then `method,T,rmse,sparsity,seconds,setup_seconds,classifier_error`.
void write_bench_csv(std::ostream& out, std::span<const BenchmarkRecord> records);
void write_bench_csv(const std::filesystem::path& path, std::span<const BenchmarkRecord> records);

/// `# schema=pointcloud-v1` then `method,T,sample_id,sparsity,rmse`.
void export_point_cloud(std::ostream& out, std::span<const SamplePoint> points);
void export_point_cloud(const std::filesystem::path& path, std::span<const SamplePoint> points);

/// Reshapes a row-major patch vector to rows x cols and writes it as PGM.
void dump_patch_pgm(const std::filesystem::path& path, const Vector& patch, std::size_t rows, std::size_t cols);

}  // namespace lsalsa
