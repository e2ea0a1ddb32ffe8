#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>

#include "lsalsa/core.hpp"

namespace lsalsa {

/// Grayscale image, intensities in [0, 1].
using Image = Matrix;

struct RgbImage {
  Matrix r, g, b;
};

struct ImageSet {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Image> images;
};

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

/// IDX (MNIST-family) u8 image file; pixels scaled by 1/255.
ImageSet import_idx_images(const std::filesystem::path& path);
std::vector<std::uint8_t> import_idx_labels(const std::filesystem::path& path);
/// Writes pixels as round(255 * clamp(p, 0, 1)).
void export_idx_images(const std::filesystem::path& path, const ImageSet& set);
void export_idx_labels(const std::filesystem::path& path, std::span<const std::uint8_t> labels);

/// Binary PGM (P5). Reading accepts maxval <= 255; writing uses maxval 255.
Image read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const Image& image);

/// ITU-R 601 luma: 0.299 R + 0.587 G + 0.114 B.
Image to_grayscale(const RgbImage& rgb);

/// Bilinear resampling with pixel-center alignment and edge clamping.
Image resize_bilinear(const Image& image, std::size_t rows, std::size_t cols);

struct PatchSpec {
  std::size_t patch_h = 10;
  std::size_t patch_w = 10;
  /// Keep only patches whose (population) standard deviation is >= min_std.
  std::optional<double> min_std;
};

/// Non-overlapping row-major tiling; edge pixels that do not fill a patch are ignored.
std::vector<Vector> extract_patches(const Image& image, const PatchSpec& spec);
/// Inverse tiling over the covered region (uncovered pixels are 0). Requires no min_std filtering.
Image reassemble_patches(std::span<const Vector> patches, std::size_t rows, std::size_t cols,
                         const PatchSpec& spec);

struct MixtureSet {
  /// Each signal carries component_truth = {a, b}.
  std::vector<Signal> mixtures;
  std::vector<std::pair<std::size_t, std::size_t>> provenance;
  std::uint64_t seed = 0;
};

/// Draws `count` uniform (a, b) index pairs from mt19937_64(seed), a first, and sums them.
/// truth_a is stored as fl(mixed - b), which equals a to within one rounding.
MixtureSet make_mixtures(std::span<const Vector> set_a, std::span<const Vector> set_b, std::size_t count,
                         std::uint64_t seed);

/// Writes `<stem>.mixed.lsam`, `<stem>.truth_a.lsam`, `<stem>.truth_b.lsam` and a JSON
/// manifest with the seed, provenance and the given source digests.
void save_mixture_set(const MixtureSet& set, const std::filesystem::path& manifest,
                      const std::vector<std::string>& source_digests = {});
MixtureSet load_mixture_set(const std::filesystem::path& manifest);

enum class CodeMethod { FISTA, SALSA };

struct CodeSet {
  std::vector<ComponentCode> codes;
  double mean_sparsity = 0.0;
};

/// Iteration budgets used when the caller does not override max_iters.
inline constexpr int kDefaultFistaCodeIters = 200;
inline constexpr int kDefaultSalsaCodeIters = 100;

/// SALSA codes are the final split variable u rather than the output-stage x.
CodeSet generate_optimal_codes(std::span<const Vector> signals, const ConcatDictionary& dict,
                               const SolverConfig& config, CodeMethod method);

struct Reconstruction {
  std::vector<Vector> components;  // A_i x_i
  Vector sum;                      // A x
};

Reconstruction reconstruct(const ComponentCode& code, const ConcatDictionary& dict);

/// Synthetic sparse data: y = A x with `nonzeros` Gaussian entries per code.
struct PlantedData {
  std::vector<Vector> signals;
  std::vector<Vector> codes;
};
PlantedData planted_signals(const Dictionary& dict, std::size_t count, std::size_t nonzeros, std::uint64_t seed);

}  // namespace lsalsa
