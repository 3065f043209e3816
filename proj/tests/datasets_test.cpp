#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <numeric>
#include <vector>

#include <unistd.h>

#include "mdpu/datasets.hpp"

using namespace mdpu;

namespace {

// Independent IDX writer used as the reference encoder.
std::vector<std::uint8_t> encode_idx(std::uint32_t magic, const std::vector<std::uint32_t>& dims,
                                     const std::vector<std::uint8_t>& data) {
  std::vector<std::uint8_t> out;
  auto be = [&](std::uint32_t v) {
    for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
  };
  be(magic);
  for (auto d : dims) be(d);
  out.insert(out.end(), data.begin(), data.end());
  return out;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("mdpu_" + std::to_string(::getpid()) + "_" + name);
}

// P(correct) of the rule sign((mu+ - mu-) . x - c) for the symmetric
// two-Gaussian family, by trapezoidal integration of the projected density.
double bayes_accuracy_by_integration(double separation, double sigma) {
  const double mu = separation / 2.0;
  const int steps = 200000;
  const double lo = -12.0 * sigma, hi = 0.0;
  const double h = (hi - lo) / steps;
  double mass = 0.0;  // P(x < 0 | class +) along the projection axis
  for (int i = 0; i <= steps; ++i) {
    const double x = lo + i * h;
    const double dens = std::exp(-0.5 * std::pow((x - mu) / sigma, 2)) / (sigma * std::sqrt(2.0 * M_PI));
    mass += (i == 0 || i == steps ? 0.5 : 1.0) * dens;
  }
  return 1.0 - mass * h;
}

}  // namespace

TEST(Gaussians, EmpiricalMeansWithinClt) {
  const std::vector<double> mp = {1.5, 1.5}, mm = {-1.5, -1.5};
  const std::size_t n = 100000;
  const auto pool = gen_gaussians(n, mp, mm, 1.0, 17);
  ASSERT_EQ(pool.size(), 2 * n);
  for (int cls = 0; cls < 2; ++cls) {
    const auto& idx = cls == 0 ? pool.positives() : pool.negatives();
    const auto& mean = cls == 0 ? mp : mm;
    for (Eigen::Index j = 0; j < 2; ++j) {
      double s = 0.0;
      for (auto i : idx) s += pool.features()(static_cast<Eigen::Index>(i), j);
      EXPECT_LE(std::abs(s / static_cast<double>(idx.size()) - mean[static_cast<std::size_t>(j)]),
                3.0 / std::sqrt(static_cast<double>(n)));
    }
  }
}

TEST(Gaussians, SingleRowPerClassAndDeterminism) {
  const std::vector<double> mp = {1.0, 0.0}, mm = {0.0, 1.0};
  EXPECT_EQ(gen_gaussians(1, mp, mm, 3.7, 1).size(), 2u);
  EXPECT_TRUE(gen_gaussians(10, mp, mm, 1.0, 5).features() == gen_gaussians(10, mp, mm, 1.0, 5).features());
  EXPECT_THROW(gen_gaussians(1, mp, mm, 0.0, 1), std::invalid_argument);
}

TEST(Gaussians, BayesAccuracyMatchesIntegration) {
  for (double sigma : {0.5, 1.0, 2.0}) {
    const std::vector<double> mp = {1.5, 1.5}, mm = {-1.5, -1.5};
    const double sep = std::sqrt(18.0);
    EXPECT_NEAR(gaussian_bayes_accuracy(mp, mm, sigma), bayes_accuracy_by_integration(sep, sigma), 1e-7);
  }
  const std::vector<double> a = {0.0}, b = {1.0};
  EXPECT_NEAR(gaussian_bayes_accuracy(a, b, 0.5), bayes_accuracy_by_integration(1.0, 0.5), 1e-7);
}

TEST(Idx, ImageExample) {
  const auto bytes = encode_idx(0x803, {2, 2, 2}, {0, 1, 2, 3, 4, 5, 6, 7});
  const Matrix m = parse_idx(bytes).as_matrix();
  ASSERT_EQ(m.rows(), 2);
  ASSERT_EQ(m.cols(), 4);
  for (int i = 0; i < 8; ++i) EXPECT_DOUBLE_EQ(m.data()[i], i / 255.0);
}

TEST(Idx, LabelExample) {
  const auto bytes = encode_idx(0x801, {3}, {5, 0, 9});
  EXPECT_EQ(parse_idx(bytes).as_labels(), (std::vector<int>{5, 0, 9}));
}

TEST(Idx, Errors) {
  try {
    parse_idx(encode_idx(0x802, {1}, {0}));
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "unsupported IDX magic");
  }
  auto bytes = encode_idx(0x803, {2, 2, 2}, {0, 1, 2, 3, 4, 5, 6, 7});
  bytes.pop_back();
  try {
    parse_idx(bytes);
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "payload shorter than header claims");
  }
  EXPECT_THROW(read_idx(temp_path("does_not_exist")), std::runtime_error);
}

TEST(Idx, RoundTripRandomTensors) {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const std::uint32_t n = 1 + static_cast<std::uint32_t>(rng.below(5));
    const std::uint32_t h = 1 + static_cast<std::uint32_t>(rng.below(6));
    const std::uint32_t w = 1 + static_cast<std::uint32_t>(rng.below(6));
    std::vector<std::uint8_t> data(n * h * w);
    for (auto& b : data) b = static_cast<std::uint8_t>(rng.below(256));
    const auto t = parse_idx(encode_idx(0x803, {n, h, w}, data));
    EXPECT_EQ(t.dims, (std::vector<std::uint32_t>{n, h, w}));
    EXPECT_EQ(t.data, data);
  }
}

TEST(Idx, FileLoadAppliesRelabel) {
  const auto img = temp_path("img.idx"), lab = temp_path("lab.idx");
  const auto ib = encode_idx(0x803, {3, 1, 2}, {0, 255, 10, 20, 30, 40});
  const auto lb = encode_idx(0x801, {3}, {4, 7, 0});
  write_bytes_atomic(img, ib);
  write_bytes_atomic(lab, lb);
  const auto set = load_idx_dataset(img, lab, relabel_rule("mnist"));
  EXPECT_EQ(set.labels, (std::vector<Label>{Label::Positive, Label::Negative, Label::Positive}));
  EXPECT_DOUBLE_EQ(set.features(0, 1), 1.0);
  std::filesystem::remove(img);
  std::filesystem::remove(lab);
}

TEST(Relabel, Examples) {
  const auto mnist = relabel_rule("mnist");
  EXPECT_EQ(relabel(std::vector<int>{4}, mnist)[0], Label::Positive);
  EXPECT_EQ(relabel(std::vector<int>{7}, mnist)[0], Label::Negative);
  // Fashion-MNIST ids: 0 T-shirt, 2 Pullover, 4 Coat, 6 Shirt, 8 Bag.
  const auto fashion = relabel_rule("fashion-mnist");
  for (int id : {0, 2, 4, 6, 8}) EXPECT_EQ(relabel(std::vector<int>{id}, fashion)[0], Label::Positive);
  for (int id : {1, 3, 5, 7, 9}) EXPECT_EQ(relabel(std::vector<int>{id}, fashion)[0], Label::Negative);
  // Letters run 1..26 from A.
  const auto letters = relabel_rule("emnist-letters");
  EXPECT_EQ(relabel(std::vector<int>{1}, letters)[0], Label::Positive);
  EXPECT_EQ(relabel(std::vector<int>{2}, letters)[0], Label::Negative);
  EXPECT_EQ(relabel(std::vector<int>{26}, letters)[0], Label::Negative);
  EXPECT_THROW(relabel(std::vector<int>{0}, letters), std::invalid_argument);
  EXPECT_THROW(relabel(std::vector<int>{10}, mnist), std::invalid_argument);
  EXPECT_THROW(relabel_rule("cifar10"), std::invalid_argument);
}

TEST(Relabel, RulesAreTotalAndTwoSided) {
  const std::vector<std::pair<std::string, std::pair<int, int>>> sets = {
      {"mnist", {0, 10}}, {"emnist-digits", {0, 10}}, {"fashion-mnist", {0, 10}},
      {"emnist-letters", {1, 26}}, {"emnist-balanced", {0, 47}}};
  for (const auto& [name, range] : sets) {
    const auto rule = relabel_rule(name);
    std::vector<int> ids(static_cast<std::size_t>(range.second));
    std::iota(ids.begin(), ids.end(), range.first);
    const auto y = relabel(ids, rule);
    EXPECT_EQ(rule.mapping.size(), ids.size()) << name;
    EXPECT_NE(std::count(y.begin(), y.end(), Label::Positive), 0) << name;
    EXPECT_NE(std::count(y.begin(), y.end(), Label::Negative), 0) << name;
  }
}

TEST(Relabel, MnistTrainingPriorIsNearHalf) {
  // Canonical per-digit counts of the 60000-image MNIST training split.
  const int counts[10] = {5923, 6742, 5958, 6131, 5842, 5421, 5918, 6265, 5851, 5949};
  std::vector<int> ids;
  for (int d = 0; d < 10; ++d) ids.insert(ids.end(), static_cast<std::size_t>(counts[d]), d);
  const auto y = relabel(ids, relabel_rule("mnist"));
  const double prior = static_cast<double>(std::count(y.begin(), y.end(), Label::Positive)) / y.size();
  EXPECT_NEAR(prior, 0.5, 0.02);
}

TEST(MatrixFile, RoundTripIsBitExact) {
  Matrix m(2, 3);
  m << 0.5, -1.25, 3.0, 1e-3f, 7.0f / 3.0f, -0.0;
  const auto path = temp_path("m.bin");
  write_matrix(path, m);
  const auto back = read_matrix(path);
  ASSERT_EQ(back.matrix.rows(), 2);
  ASSERT_EQ(back.matrix.cols(), 3);
  EXPECT_EQ(std::memcmp(back.matrix.data(), m.data(), sizeof(double) * 6), 0);
  EXPECT_FALSE(back.labels.has_value());

  const std::vector<Label> y = {Label::Negative, Label::Positive};
  write_matrix(path, m, &y);
  const auto with_labels = read_matrix(path);
  ASSERT_TRUE(with_labels.labels.has_value());
  EXPECT_EQ(*with_labels.labels, y);
  std::filesystem::remove(path);
}

TEST(MatrixFile, EmptyIsHeaderOnly) {
  const auto bytes = encode_matrix(Matrix(0, 0));
  EXPECT_EQ(bytes.size(), kMatrixHeaderBytes);
  const auto f = decode_matrix(bytes);
  EXPECT_EQ(f.matrix.size(), 0);
}

TEST(MatrixFile, HeaderLayout) {
  const auto bytes = encode_matrix(Matrix::Zero(1, 2));
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "MDPU");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[8], 1);
  EXPECT_EQ(bytes[16], 2);
  EXPECT_EQ(bytes.size(), kMatrixHeaderBytes + 8);
}

TEST(MatrixFile, Errors) {
  auto bytes = encode_matrix(Matrix::Ones(3, 3));
  bytes.resize(bytes.size() - 5);
  try {
    decode_matrix(bytes);
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "payload shorter than header claims");
  }
  auto extra = encode_matrix(Matrix::Ones(2, 2));
  extra.push_back(0);
  EXPECT_THROW(decode_matrix(extra), std::runtime_error);
  auto magic = encode_matrix(Matrix::Ones(1, 1));
  magic[0] = 'X';
  EXPECT_THROW(decode_matrix(magic), std::runtime_error);
  Matrix bad(1, 1);
  bad(0, 0) = std::nan("");
  EXPECT_THROW(encode_matrix(bad), std::invalid_argument);
}

TEST(Subsample, SizeAndDeterminism) {
  LabeledSet s{Matrix(10, 1), std::vector<Label>(10, Label::Positive)};
  for (int i = 0; i < 10; ++i) s.features(i, 0) = i;
  const auto a = subsample(s, 4, 9), b = subsample(s, 4, 9);
  EXPECT_EQ(a.size(), 4u);
  EXPECT_TRUE(a.features == b.features);
  EXPECT_EQ(subsample(s, 100, 1).size(), 10u);
}
