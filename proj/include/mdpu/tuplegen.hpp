#pragma once

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mdpu/coeffs.hpp"
#include "mdpu/matrix.hpp"
#include "mdpu/random.hpp"

namespace mdpu {

namespace audit {
struct Access;
}

/// Labeled instances split into per-class index lists. Sampling draws
/// uniformly with replacement from one class at a time.
class LabeledPool {
 public:
  LabeledPool(Matrix features, std::vector<Label> labels)
      : features_(std::move(features)), labels_(std::move(labels)) {
    if (static_cast<std::size_t>(features_.rows()) != labels_.size())
      throw std::invalid_argument("pool: feature rows and label count differ");
    for (std::size_t i = 0; i < labels_.size(); ++i)
      (labels_[i] == Label::Positive ? positives_ : negatives_).push_back(i);
    if (positives_.empty() || negatives_.empty())
      throw std::invalid_argument("pool must contain at least one positive and one negative");
  }

  const Matrix& features() const { return features_; }
  const std::vector<Label>& labels() const { return labels_; }
  const std::vector<std::size_t>& positives() const { return positives_; }
  const std::vector<std::size_t>& negatives() const { return negatives_; }
  std::size_t size() const { return labels_.size(); }
  Eigen::Index dim() const { return features_.cols(); }

 private:
  Matrix features_;
  std::vector<Label> labels_;
  std::vector<std::size_t> positives_;
  std::vector<std::size_t> negatives_;
};

/// n tuples of M instances each, stored as n*M feature rows (tuple i,
/// position j at row i*M + j). The generating labels travel with the batch
/// but are only reachable through audit::Access.
class MTupleBatch {
 public:
  MTupleBatch(int m, Matrix features, std::vector<Label> hidden_labels)
      : m_(m), features_(std::move(features)), labels_(std::move(hidden_labels)) {
    if (m < 1) throw std::invalid_argument("tuple size must be >= 1");
    if (features_.rows() % m != 0)
      throw std::invalid_argument("feature rows are not a multiple of the tuple size");
    if (static_cast<std::size_t>(features_.rows()) != labels_.size())
      throw std::invalid_argument("tuple batch: feature rows and label count differ");
    for (std::size_t i = 0; i < size(); ++i) {
      int balance = 0;
      for (int j = 0; j < m_; ++j) balance += static_cast<int>(sign(labels_[i * m_ + j]));
      if (balance < 0) throw std::logic_error("tuple violates positive dominance");
    }
  }

  int m() const { return m_; }
  std::size_t size() const { return static_cast<std::size_t>(features_.rows()) / m_; }
  Eigen::Index dim() const { return features_.cols(); }
  const Matrix& features() const { return features_; }

 private:
  friend struct audit::Access;
  int m_;
  Matrix features_;
  std::vector<Label> labels_;
};

/// Pointwise unlabeled instances from the prior-weighted class mixture.
class UnlabeledBatch {
 public:
  UnlabeledBatch(Matrix features, std::vector<Label> hidden_labels)
      : features_(std::move(features)), labels_(std::move(hidden_labels)) {
    if (static_cast<std::size_t>(features_.rows()) != labels_.size())
      throw std::invalid_argument("unlabeled batch: feature rows and label count differ");
  }

  std::size_t size() const { return labels_.size(); }
  Eigen::Index dim() const { return features_.cols(); }
  const Matrix& features() const { return features_; }

 private:
  friend struct audit::Access;
  Matrix features_;
  std::vector<Label> labels_;
};

namespace audit {

/// The only route to generating labels. Used by statistics, serialization
/// and verification; never by training.
struct Access {
  static const std::vector<Label>& labels(const MTupleBatch& b) { return b.labels_; }
  static const std::vector<Label>& labels(const UnlabeledBatch& b) { return b.labels_; }
};

}  // namespace audit

/// Draws n tuples from the dominant-positive tuple density.
///
/// Two-stage and exact: first the negative count k ~ p_k, then a uniform
/// size-k subset of positions receives negatives. Conditional on k every
/// subset carries the same weight pi_plus^(M-k) pi_minus^k, so this is the
/// target density without rejection.
inline MTupleBatch sample_mdp_tuples(const LabeledPool& pool, const ProblemSpec& spec,
                                     std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("tuple count must be >= 1");
  const Coefficients coeffs = compute_coefficients(spec);
  const int m = spec.m();

  Rng rng(seed);
  Matrix features(static_cast<Eigen::Index>(n) * m, pool.dim());
  std::vector<Label> labels(n * static_cast<std::size_t>(m));
  std::vector<int> positions(static_cast<std::size_t>(m));

  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform();
    int k = 0;
    double cum = coeffs.p_k[0];
    while (u >= cum && k + 1 < static_cast<int>(coeffs.p_k.size())) cum += coeffs.p_k[++k];

    // Partial Fisher-Yates: the first k entries become the negative slots.
    std::iota(positions.begin(), positions.end(), 0);
    for (int s = 0; s < k; ++s) {
      const auto j = s + static_cast<int>(rng.below(static_cast<std::uint64_t>(m - s)));
      std::swap(positions[s], positions[j]);
    }
    std::vector<bool> negative(static_cast<std::size_t>(m), false);
    for (int s = 0; s < k; ++s) negative[positions[s]] = true;

    for (int j = 0; j < m; ++j) {
      const auto& sub = negative[j] ? pool.negatives() : pool.positives();
      const std::size_t src = sub[rng.below(sub.size())];
      const auto row = static_cast<Eigen::Index>(i * m + j);
      features.row(row) = pool.features().row(static_cast<Eigen::Index>(src));
      labels[i * m + j] = negative[j] ? Label::Negative : Label::Positive;
    }
  }
  return MTupleBatch(m, std::move(features), std::move(labels));
}

/// Draws n points: label ~ Bernoulli(pi_plus), then an instance of that class.
inline UnlabeledBatch sample_unlabeled(const LabeledPool& pool, double pi_plus, std::size_t n,
                                       std::uint64_t seed) {
  if (!(pi_plus > 0.0 && pi_plus < 1.0))
    throw std::domain_error("class prior must lie in (0,1)");
  Rng rng(seed);
  Matrix features(static_cast<Eigen::Index>(n), pool.dim());
  std::vector<Label> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool pos = rng.bernoulli(pi_plus);
    const auto& sub = pos ? pool.positives() : pool.negatives();
    features.row(static_cast<Eigen::Index>(i)) =
        pool.features().row(static_cast<Eigen::Index>(sub[rng.below(sub.size())]));
    labels[i] = pos ? Label::Positive : Label::Negative;
  }
  return UnlabeledBatch(std::move(features), std::move(labels));
}

struct PositionStats {
  std::vector<double> positive_fraction;          // per tuple position
  std::vector<std::size_t> negative_count_hist;   // index k = negatives in tuple
};

inline PositionStats empirical_position_stats(const MTupleBatch& batch) {
  if (batch.size() == 0) throw std::invalid_argument("empty batch");
  const auto& labels = audit::Access::labels(batch);
  const int m = batch.m();
  PositionStats s;
  s.positive_fraction.assign(static_cast<std::size_t>(m), 0.0);
  s.negative_count_hist.assign(static_cast<std::size_t>(m / 2) + 1, 0);
  std::vector<std::size_t> pos(static_cast<std::size_t>(m), 0);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    std::size_t k = 0;
    for (int j = 0; j < m; ++j) {
      if (labels[i * m + j] == Label::Positive)
        ++pos[j];
      else
        ++k;
    }
    ++s.negative_count_hist[k];
  }
  for (int j = 0; j < m; ++j)
    s.positive_fraction[j] = static_cast<double>(pos[j]) / static_cast<double>(batch.size());
  return s;
}

}  // namespace mdpu
