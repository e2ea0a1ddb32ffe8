#include "lsalsa/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>
#include <sstream>

#include "json.hpp"
#include "lsalsa/encoder.hpp"
#include "lsalsa/lsam.hpp"

namespace lsalsa {
namespace {

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.is_open(), ErrorCode::IoError, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void dump(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.is_open(), ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  require(static_cast<bool>(out), ErrorCode::IoError, "failed writing " + path.string());
}

std::string hex_of(std::uint32_t v) {
  std::ostringstream os;
  os << std::hex << v;
  return os.str();
}

std::uint32_t be32(const std::vector<std::uint8_t>& b, std::size_t pos) {
  return (std::uint32_t{b[pos]} << 24) | (std::uint32_t{b[pos + 1]} << 16) | (std::uint32_t{b[pos + 2]} << 8) |
         std::uint32_t{b[pos + 3]};
}

void put_be32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) b.push_back(static_cast<std::uint8_t>((v >> shift) & 0xffU));
}

/// Validates the header against `magic` and returns (dims, payload offset).
std::pair<std::vector<std::uint32_t>, std::size_t> parse_idx_header(const std::vector<std::uint8_t>& b,
                                                                    std::uint32_t magic, const std::string& what) {
  require(b.size() >= 4, ErrorCode::FormatError, what + ": file too short for IDX magic");
  const auto found = be32(b, 0);
  require(found == magic, ErrorCode::FormatError, what + ": bad IDX magic 0x" + hex_of(found));
  const std::size_t ndims = magic & 0xffU;
  require(b.size() >= 4 + 4 * ndims, ErrorCode::FormatError, what + ": truncated IDX dimension header");
  std::vector<std::uint32_t> dims;
  std::size_t count = 1;
  for (std::size_t i = 0; i < ndims; ++i) {
    dims.push_back(be32(b, 4 + 4 * i));
    count *= dims.back();
  }
  const std::size_t offset = 4 + 4 * ndims;
  require(b.size() - offset == count, ErrorCode::FormatError,
          what + ": payload has " + std::to_string(b.size() - offset) + " bytes, header promises " +
              std::to_string(count));
  return {dims, offset};
}

std::uint8_t to_byte(double p) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(p, 0.0, 1.0) * 255.0));
}

}  // namespace

ImageSet import_idx_images(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  const auto [dims, offset] = parse_idx_header(bytes, kIdxImageMagic, path.string());
  ImageSet set;
  set.rows = dims[1];
  set.cols = dims[2];
  const std::size_t pixels = set.rows * set.cols;
  set.images.reserve(dims[0]);
  for (std::size_t n = 0; n < dims[0]; ++n) {
    Image img(static_cast<Eigen::Index>(set.rows), static_cast<Eigen::Index>(set.cols));
    for (std::size_t k = 0; k < pixels; ++k)
      img.data()[k] = static_cast<double>(bytes[offset + n * pixels + k]) / 255.0;
    set.images.push_back(std::move(img));
  }
  return set;
}

std::vector<std::uint8_t> import_idx_labels(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  const auto [dims, offset] = parse_idx_header(bytes, kIdxLabelMagic, path.string());
  return {bytes.begin() + static_cast<std::ptrdiff_t>(offset), bytes.end()};
}

void export_idx_images(const std::filesystem::path& path, const ImageSet& set) {
  std::vector<std::uint8_t> b;
  put_be32(b, kIdxImageMagic);
  put_be32(b, static_cast<std::uint32_t>(set.images.size()));
  put_be32(b, static_cast<std::uint32_t>(set.rows));
  put_be32(b, static_cast<std::uint32_t>(set.cols));
  for (const auto& img : set.images) {
    require(static_cast<std::size_t>(img.rows()) == set.rows && static_cast<std::size_t>(img.cols()) == set.cols,
            ErrorCode::ShapeMismatch, "image size differs from set header");
    for (Eigen::Index k = 0; k < img.size(); ++k) b.push_back(to_byte(img.data()[k]));
  }
  dump(path, b);
}

void export_idx_labels(const std::filesystem::path& path, std::span<const std::uint8_t> labels) {
  std::vector<std::uint8_t> b;
  put_be32(b, kIdxLabelMagic);
  put_be32(b, static_cast<std::uint32_t>(labels.size()));
  b.insert(b.end(), labels.begin(), labels.end());
  dump(path, b);
}

Image read_pgm(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&](const char* field) {
    skip_space();
    require(pos < bytes.size() && std::isdigit(bytes[pos]), ErrorCode::FormatError,
            path.string() + ": bad PGM " + field);
    long v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) v = v * 10 + (bytes[pos++] - '0');
    return v;
  };
  require(bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5', ErrorCode::FormatError,
          path.string() + ": not a binary PGM (P5)");
  pos = 2;
  const long w = read_int("width");
  const long h = read_int("height");
  const long maxval = read_int("maxval");
  require(w > 0 && h > 0 && maxval > 0 && maxval <= 255, ErrorCode::FormatError,
          path.string() + ": unsupported PGM header");
  require(pos < bytes.size() && std::isspace(bytes[pos]), ErrorCode::FormatError, path.string() + ": bad PGM header");
  ++pos;
  require(bytes.size() - pos >= static_cast<std::size_t>(w * h), ErrorCode::FormatError,
          path.string() + ": truncated PGM payload");
  Image img(h, w);
  for (long k = 0; k < w * h; ++k) img.data()[k] = static_cast<double>(bytes[pos + k]) / static_cast<double>(maxval);
  return img;
}

void write_pgm(const std::filesystem::path& path, const Image& image) {
  const std::string header =
      "P5\n" + std::to_string(image.cols()) + " " + std::to_string(image.rows()) + "\n255\n";
  std::vector<std::uint8_t> b(header.begin(), header.end());
  for (Eigen::Index k = 0; k < image.size(); ++k) b.push_back(to_byte(image.data()[k]));
  dump(path, b);
}

Image to_grayscale(const RgbImage& rgb) {
  require(rgb.r.rows() == rgb.g.rows() && rgb.r.rows() == rgb.b.rows() && rgb.r.cols() == rgb.g.cols() &&
              rgb.r.cols() == rgb.b.cols(),
          ErrorCode::ShapeMismatch, "RGB channels differ in size");
  return 0.299 * rgb.r + 0.587 * rgb.g + 0.114 * rgb.b;
}

Image resize_bilinear(const Image& image, std::size_t rows, std::size_t cols) {
  require(rows >= 1 && cols >= 1 && image.size() > 0, ErrorCode::ShapeMismatch, "empty resize");
  const auto in_r = image.rows();
  const auto in_c = image.cols();
  Image out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  const double sy = static_cast<double>(in_r) / static_cast<double>(rows);
  const double sx = static_cast<double>(in_c) / static_cast<double>(cols);
  for (std::size_t i = 0; i < rows; ++i) {
    const double fy = std::clamp((static_cast<double>(i) + 0.5) * sy - 0.5, 0.0, static_cast<double>(in_r - 1));
    const auto y0 = static_cast<Eigen::Index>(std::floor(fy));
    const auto y1 = std::min<Eigen::Index>(y0 + 1, in_r - 1);
    const double wy = fy - static_cast<double>(y0);
    for (std::size_t j = 0; j < cols; ++j) {
      const double fx = std::clamp((static_cast<double>(j) + 0.5) * sx - 0.5, 0.0, static_cast<double>(in_c - 1));
      const auto x0 = static_cast<Eigen::Index>(std::floor(fx));
      const auto x1 = std::min<Eigen::Index>(x0 + 1, in_c - 1);
      const double wx = fx - static_cast<double>(x0);
      const double top = (1 - wx) * image(y0, x0) + wx * image(y0, x1);
      const double bot = (1 - wx) * image(y1, x0) + wx * image(y1, x1);
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (1 - wy) * top + wy * bot;
    }
  }
  return out;
}

std::vector<Vector> extract_patches(const Image& image, const PatchSpec& spec) {
  require(spec.patch_h >= 1 && spec.patch_w >= 1, ErrorCode::InvalidArgument, "patch dims must be >= 1");
  const auto rows = static_cast<std::size_t>(image.rows());
  const auto cols = static_cast<std::size_t>(image.cols());
  require(spec.patch_h <= rows && spec.patch_w <= cols, ErrorCode::PatchTooLarge,
          std::to_string(spec.patch_h) + "x" + std::to_string(spec.patch_w) + " patch exceeds " +
              std::to_string(rows) + "x" + std::to_string(cols) + " image");
  const auto ph = static_cast<Eigen::Index>(spec.patch_h);
  const auto pw = static_cast<Eigen::Index>(spec.patch_w);
  std::vector<Vector> patches;
  for (std::size_t r = 0; r + spec.patch_h <= rows; r += spec.patch_h) {
    for (std::size_t c = 0; c + spec.patch_w <= cols; c += spec.patch_w) {
      Matrix block = image.block(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c), ph, pw);
      Vector v = Eigen::Map<const Vector>(block.data(), block.size());
      if (spec.min_std) {
        const double mean = v.mean();
        const double sd = std::sqrt((v.array() - mean).square().mean());
        if (sd < *spec.min_std) continue;
      }
      patches.push_back(std::move(v));
    }
  }
  return patches;
}

Image reassemble_patches(std::span<const Vector> patches, std::size_t rows, std::size_t cols,
                         const PatchSpec& spec) {
  require(!spec.min_std, ErrorCode::InvalidArgument, "cannot reassemble filtered patches");
  const std::size_t per_row = cols / spec.patch_w;
  const std::size_t per_col = rows / spec.patch_h;
  require(patches.size() == per_row * per_col, ErrorCode::ShapeMismatch, "patch count does not tile the image");
  Image img = Image::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  const auto ph = static_cast<Eigen::Index>(spec.patch_h);
  const auto pw = static_cast<Eigen::Index>(spec.patch_w);
  for (std::size_t k = 0; k < patches.size(); ++k) {
    require(patches[k].size() == ph * pw, ErrorCode::ShapeMismatch, "patch length");
    const auto r = static_cast<Eigen::Index>((k / per_row) * spec.patch_h);
    const auto c = static_cast<Eigen::Index>((k % per_row) * spec.patch_w);
    img.block(r, c, ph, pw) = Eigen::Map<const Matrix>(patches[k].data(), ph, pw);
  }
  return img;
}

MixtureSet make_mixtures(std::span<const Vector> set_a, std::span<const Vector> set_b, std::size_t count,
                         std::uint64_t seed) {
  require(!set_a.empty() && !set_b.empty(), ErrorCode::EmptySource, "mixture sources must be non-empty");
  const auto m = set_a.front().size();
  for (const auto& v : set_a) require(v.size() == m, ErrorCode::DimensionMismatch, "ragged source A");
  for (const auto& v : set_b) require(v.size() == m, ErrorCode::DimensionMismatch, "sources differ in dimension");

  MixtureSet out;
  out.seed = seed;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick_a(0, set_a.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_b(0, set_b.size() - 1);
  for (std::size_t n = 0; n < count; ++n) {
    const auto ia = pick_a(rng);
    const auto ib = pick_b(rng);
    Signal s(set_a[ia] + set_b[ib]);
    // truth_a is stored as mixed - b so that subtraction recovers it bit-for-bit.
    s.component_truth = {s.data - set_b[ib], set_b[ib]};
    out.mixtures.push_back(std::move(s));
    out.provenance.emplace_back(ia, ib);
  }
  return out;
}

CodeSet generate_optimal_codes(std::span<const Vector> signals, const ConcatDictionary& dict,
                               const SolverConfig& config, CodeMethod method) {
  CodeSet out;
  out.codes.reserve(signals.size());
  if (method == CodeMethod::FISTA) {
    const auto encoder = Encoder::iterative(Method::FISTA, dict, config);
    for (const auto& y : signals) out.codes.push_back(encoder.encode(y));
  } else {
    // The split variable u is the exactly sparse iterate; it converges to the minimizer.
    config.validate(dict.components());
    const Matrix s = build_splitting_operator(dict, config.mu);
    const TraceOptions quiet{.record = false};
    for (const auto& y : signals)
      out.codes.emplace_back(salsa(Signal(y), dict, config, &s, quiet).split, dict.partition());
  }
  double total = 0.0;
  for (const auto& c : out.codes) total += sparsity(c);
  out.mean_sparsity = signals.empty() ? 0.0 : total / static_cast<double>(signals.size());
  return out;
}

Reconstruction reconstruct(const ComponentCode& code, const ConcatDictionary& dict) {
  require(code.size() == dict.atoms() && code.partition == dict.partition(), ErrorCode::ShapeMismatch,
          "code layout does not match the dictionary");
  Reconstruction out;
  out.sum = Vector::Zero(static_cast<Eigen::Index>(dict.signal_dim()));
  for (std::size_t i = 0; i < dict.components(); ++i) {
    out.components.push_back(dict.parts()[i].atoms() * code.block(i));
    out.sum += out.components.back();
  }
  return out;
}

PlantedData planted_signals(const Dictionary& dict, std::size_t count, std::size_t nonzeros, std::uint64_t seed) {
  const auto n = dict.size();
  require(nonzeros <= n, ErrorCode::InvalidArgument, "more nonzeros than atoms");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<std::size_t> idx(n);
  PlantedData out;
  for (std::size_t p = 0; p < count; ++p) {
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t k = 0; k < nonzeros; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, n - 1);
      std::swap(idx[k], idx[pick(rng)]);
    }
    Vector x = Vector::Zero(static_cast<Eigen::Index>(n));
    for (std::size_t k = 0; k < nonzeros; ++k) x[static_cast<Eigen::Index>(idx[k])] = normal(rng);
    out.signals.push_back(dict.atoms() * x);
    out.codes.push_back(std::move(x));
  }
  return out;
}

void save_mixture_set(const MixtureSet& set, const std::filesystem::path& manifest,
                      const std::vector<std::string>& source_digests) {
  require(!set.mixtures.empty(), ErrorCode::EmptySource, "empty mixture set");
  std::vector<Vector> mixed, a, b;
  for (const auto& s : set.mixtures) {
    require(s.component_truth.size() == 2, ErrorCode::ShapeMismatch, "mixture without two truth components");
    mixed.push_back(s.data);
    a.push_back(s.component_truth[0]);
    b.push_back(s.component_truth[1]);
  }
  const auto dir = manifest.parent_path();
  const auto stem = manifest.stem().string();
  const std::string names[3] = {stem + ".mixed.lsam", stem + ".truth_a.lsam", stem + ".truth_b.lsam"};
  write_lsam(dir / names[0], rows_from(mixed));
  write_lsam(dir / names[1], rows_from(a));
  write_lsam(dir / names[2], rows_from(b));

  nlohmann::json j;
  j["kind"] = "mixtures";
  j["count"] = set.mixtures.size();
  j["seed"] = set.seed;
  j["files"] = {{"mixed", names[0]}, {"truth_a", names[1]}, {"truth_b", names[2]}};
  j["provenance"] = nlohmann::json::array();
  for (const auto& [ia, ib] : set.provenance) j["provenance"].push_back({ia, ib});
  j["source_digests"] = source_digests;
  std::ofstream out(manifest, std::ios::trunc);
  require(out.is_open(), ErrorCode::IoError, "cannot open " + manifest.string() + " for writing");
  out << j.dump(2) << '\n';
  require(static_cast<bool>(out), ErrorCode::IoError, "failed writing " + manifest.string());
}

MixtureSet load_mixture_set(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  require(in.is_open(), ErrorCode::IoError, "cannot open " + manifest.string());
  try {
    const auto j = nlohmann::json::parse(in);
    require(j.at("kind").get<std::string>() == "mixtures", ErrorCode::FormatError,
            manifest.string() + " is not a mixture manifest");
    const auto dir = manifest.parent_path();
    const auto mixed = rows_of(read_lsam(dir / j.at("files").at("mixed").get<std::string>()));
    const auto a = rows_of(read_lsam(dir / j.at("files").at("truth_a").get<std::string>()));
    const auto b = rows_of(read_lsam(dir / j.at("files").at("truth_b").get<std::string>()));
    require(mixed.size() == a.size() && a.size() == b.size() && mixed.size() == j.at("count").get<std::size_t>(),
            ErrorCode::FormatError, manifest.string() + ": row counts disagree");
    MixtureSet set;
    set.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& p : j.at("provenance")) set.provenance.emplace_back(p.at(0).get<std::size_t>(), p.at(1).get<std::size_t>());
    for (std::size_t i = 0; i < mixed.size(); ++i) {
      Signal s(mixed[i]);
      s.component_truth = {a[i], b[i]};
      set.mixtures.push_back(std::move(s));
    }
    return set;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::FormatError, manifest.string() + ": " + e.what());
  }
}

}  // namespace lsalsa
