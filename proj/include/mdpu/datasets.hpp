#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mdpu/matrix.hpp"
#include "mdpu/random.hpp"
#include "mdpu/tuplegen.hpp"

namespace mdpu {

// ---------------------------------------------------------------------------
// Synthetic Gaussians

/// Isotropic Gaussian classes N(mean_plus, sigma^2 I) and N(mean_minus,
/// sigma^2 I), n_per_class rows each (positives first).
inline LabeledPool gen_gaussians(std::size_t n_per_class, std::span<const double> mean_plus,
                                 std::span<const double> mean_minus, double sigma,
                                 std::uint64_t seed) {
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be > 0");
  if (mean_plus.size() != mean_minus.size() || mean_plus.empty())
    throw std::invalid_argument("class means must be non-empty and of equal dimension");
  if (n_per_class == 0) throw std::invalid_argument("need at least one instance per class");
  const auto dim = static_cast<Eigen::Index>(mean_plus.size());
  Matrix x(static_cast<Eigen::Index>(2 * n_per_class), dim);
  std::vector<Label> y(2 * n_per_class);
  Rng rng(seed);
  for (std::size_t i = 0; i < 2 * n_per_class; ++i) {
    const bool pos = i < n_per_class;
    const auto mean = pos ? mean_plus : mean_minus;
    for (Eigen::Index j = 0; j < dim; ++j)
      x(static_cast<Eigen::Index>(i), j) = mean[static_cast<std::size_t>(j)] + sigma * rng.normal();
    y[i] = pos ? Label::Positive : Label::Negative;
  }
  return LabeledPool(std::move(x), std::move(y));
}

/// Bayes accuracy for two equiprobable isotropic Gaussians:
/// Phi(||mu_plus - mu_minus|| / (2 sigma)).
inline double gaussian_bayes_accuracy(std::span<const double> mean_plus,
                                      std::span<const double> mean_minus, double sigma) {
  double d2 = 0.0;
  for (std::size_t i = 0; i < mean_plus.size(); ++i) {
    const double diff = mean_plus[i] - mean_minus[i];
    d2 += diff * diff;
  }
  const double z = std::sqrt(d2) / (2.0 * sigma);
  return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

// ---------------------------------------------------------------------------
// IDX

inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;
inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;

/// Decoded IDX tensor of unsigned bytes.
struct IdxTensor {
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> data;

  /// Images as rows of H*W features scaled to [0, 1].
  Matrix as_matrix() const {
    if (dims.empty()) throw std::invalid_argument("IDX tensor has no dimensions");
    std::size_t cols = 1;
    for (std::size_t i = 1; i < dims.size(); ++i) cols *= dims[i];
    Matrix m(static_cast<Eigen::Index>(dims[0]), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < data.size(); ++i) m.data()[i] = data[i] / 255.0;
    return m;
  }

  std::vector<int> as_labels() const {
    if (dims.size() != 1) throw std::invalid_argument("IDX tensor is not a label vector");
    return {data.begin(), data.end()};
  }
};

inline IdxTensor parse_idx(std::span<const std::uint8_t> bytes) {
  auto be32 = [&](std::size_t off) {
    if (off + 4 > bytes.size()) throw std::runtime_error("payload shorter than header claims");
    return (std::uint32_t{bytes[off]} << 24) | (std::uint32_t{bytes[off + 1]} << 16) |
           (std::uint32_t{bytes[off + 2]} << 8) | std::uint32_t{bytes[off + 3]};
  };
  const std::uint32_t magic = be32(0);
  std::size_t rank = 0;
  if (magic == kIdxImageMagic)
    rank = 3;
  else if (magic == kIdxLabelMagic)
    rank = 1;
  else
    throw std::runtime_error("unsupported IDX magic");

  IdxTensor t;
  std::size_t count = 1;
  for (std::size_t i = 0; i < rank; ++i) {
    t.dims.push_back(be32(4 + 4 * i));
    count *= t.dims.back();
  }
  const std::size_t header = 4 + 4 * rank;
  if (bytes.size() < header + count) throw std::runtime_error("payload shorter than header claims");
  t.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(header),
                bytes.begin() + static_cast<std::ptrdiff_t>(header + count));
  return t;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline IdxTensor read_idx(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return parse_idx(bytes);
}

// ---------------------------------------------------------------------------
// Binary relabelings

struct RelabelRule {
  std::string dataset;
  std::map<int, Label> mapping;
};

namespace detail {
inline RelabelRule parity_rule(std::string name, int first_id, int count) {
  RelabelRule r{std::move(name), {}};
  for (int i = 0; i < count; ++i)
    r.mapping[first_id + i] = (i % 2 == 0) ? Label::Positive : Label::Negative;
  return r;
}
}  // namespace detail

/// Known rules: mnist, emnist-digits (even digits positive), fashion-mnist
/// (T-shirt, Pullover, Coat, Shirt, Bag positive: ids 0,2,4,6,8),
/// emnist-letters (ids 1..26 for A..Z; A, C, E, ... positive),
/// emnist-balanced (47 classes: digits, A..Z, then the 11 distinct
/// lowercase letters a b d e f g h n q r t; each by alphabet/digit parity
/// counting from 0).
inline RelabelRule relabel_rule(std::string_view dataset) {
  if (dataset == "mnist" || dataset == "emnist-digits" || dataset == "fashion-mnist")
    return detail::parity_rule(std::string(dataset), 0, 10);
  if (dataset == "emnist-letters") return detail::parity_rule("emnist-letters", 1, 26);
  if (dataset == "emnist-balanced") {
    RelabelRule r = detail::parity_rule("emnist-balanced", 0, 10);
    for (int i = 0; i < 26; ++i) r.mapping[10 + i] = (i % 2 == 0) ? Label::Positive : Label::Negative;
    constexpr std::array<char, 11> kLower = {'a', 'b', 'd', 'e', 'f', 'g', 'h', 'n', 'q', 'r', 't'};
    for (std::size_t i = 0; i < kLower.size(); ++i)
      r.mapping[36 + static_cast<int>(i)] =
          ((kLower[i] - 'a') % 2 == 0) ? Label::Positive : Label::Negative;
    return r;
  }
  throw std::invalid_argument("no relabel rule for dataset '" + std::string(dataset) + "'");
}

inline std::vector<Label> relabel(std::span<const int> class_ids, const RelabelRule& rule) {
  std::vector<Label> out;
  out.reserve(class_ids.size());
  for (int id : class_ids) {
    const auto it = rule.mapping.find(id);
    if (it == rule.mapping.end())
      throw std::invalid_argument("unknown class id " + std::to_string(id) + " for " + rule.dataset);
    out.push_back(it->second);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Matrix file: "MDPU" | u32 version | u64 rows | u64 cols | rows*cols f32
// [| rows * i8 labels], little-endian, row-major.

inline constexpr std::uint32_t kMatrixFileVersion = 1;
inline constexpr std::size_t kMatrixHeaderBytes = 4 + 4 + 8 + 8;

struct MatrixFile {
  Matrix matrix;
  std::optional<std::vector<Label>> labels;
};

namespace detail {

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  const U bits = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

template <typename T>
T get_le(std::span<const std::uint8_t> in, std::size_t off) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(in[off + i]) << (8 * i);
  return std::bit_cast<T>(bits);
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_matrix(const Matrix& m,
                                               const std::vector<Label>* labels = nullptr) {
  if (labels && labels->size() != static_cast<std::size_t>(m.rows()))
    throw std::invalid_argument("label count must equal row count");
  std::vector<std::uint8_t> out;
  out.reserve(kMatrixHeaderBytes + 4 * static_cast<std::size_t>(m.size()));
  for (char c : std::string_view("MDPU")) out.push_back(static_cast<std::uint8_t>(c));
  detail::put_le(out, kMatrixFileVersion);
  detail::put_le(out, static_cast<std::uint64_t>(m.rows()));
  detail::put_le(out, static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const double v = m.data()[i];
    if (!std::isfinite(v)) throw std::invalid_argument("matrix entries must be finite");
    detail::put_le(out, static_cast<float>(v));
  }
  if (labels)
    for (Label y : *labels) out.push_back(static_cast<std::uint8_t>(static_cast<std::int8_t>(y)));
  return out;
}

inline MatrixFile decode_matrix(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kMatrixHeaderBytes) throw std::runtime_error("payload shorter than header claims");
  if (std::memcmp(bytes.data(), "MDPU", 4) != 0) throw std::runtime_error("bad matrix file magic");
  const auto version = detail::get_le<std::uint32_t>(bytes, 4);
  if (version != kMatrixFileVersion)
    throw std::runtime_error("unsupported matrix file version " + std::to_string(version));
  const auto rows = detail::get_le<std::uint64_t>(bytes, 8);
  const auto cols = detail::get_le<std::uint64_t>(bytes, 16);
  if (cols != 0 && rows > (bytes.size() / 4) / cols + 1)
    throw std::runtime_error("payload shorter than header claims");
  const std::size_t payload = kMatrixHeaderBytes + 4 * rows * cols;
  if (bytes.size() < payload) throw std::runtime_error("payload shorter than header claims");
  const bool has_labels = rows > 0 && bytes.size() == payload + rows;
  if (bytes.size() != payload && !has_labels)
    throw std::runtime_error("byte length does not match header");

  MatrixFile f;
  f.matrix.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows * cols; ++i)
    f.matrix.data()[i] = detail::get_le<float>(bytes, kMatrixHeaderBytes + 4 * i);
  if (has_labels) {
    std::vector<Label> labels;
    labels.reserve(rows);
    for (std::size_t i = 0; i < rows; ++i)
      labels.push_back(label_from_int(static_cast<std::int8_t>(bytes[payload + i])));
    f.labels = std::move(labels);
  }
  return f;
}

/// Writes atomically (temporary file, then rename).
inline void write_bytes_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline void write_matrix(const std::filesystem::path& path, const Matrix& m,
                         const std::vector<Label>* labels = nullptr) {
  write_bytes_atomic(path, encode_matrix(m, labels));
}

inline MatrixFile read_matrix(const std::filesystem::path& path) {
  return decode_matrix(read_file_bytes(path));
}

// ---------------------------------------------------------------------------
// Labeled data sources

/// Loads an IDX image/label pair and applies a relabel rule.
inline LabeledSet load_idx_dataset(const std::filesystem::path& images,
                                   const std::filesystem::path& labels, const RelabelRule& rule) {
  const IdxTensor img = read_idx(images);
  const IdxTensor lab = read_idx(labels);
  if (img.dims.empty() || lab.dims.size() != 1 || img.dims[0] != lab.dims[0])
    throw std::runtime_error("IDX image and label counts differ");
  const auto ids = lab.as_labels();
  return {img.as_matrix(), relabel(ids, rule)};
}

/// Random subset of at most n rows, drawn without replacement.
inline LabeledSet subsample(const LabeledSet& set, std::size_t n, std::uint64_t seed) {
  if (n >= set.size()) return set;
  std::vector<std::size_t> idx(set.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng(seed);
  rng.shuffle(idx);
  idx.resize(n);
  LabeledSet out{gather_rows(set.features, idx), {}};
  for (std::size_t i : idx) out.labels.push_back(set.labels[i]);
  return out;
}

}  // namespace mdpu
