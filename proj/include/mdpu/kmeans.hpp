#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <stdexcept>

#include "mdpu/matrix.hpp"
#include "mdpu/random.hpp"
#include "mdpu/tuplegen.hpp"

namespace mdpu {

struct KMeansOptions {
  int max_iterations = 50;
  double tolerance = 1e-6;  // stop once no centroid moves farther than this
  int restarts = 5;
};

struct KMeansResult {
  Matrix centroids;  // 2 x (M * dim)
  double inertia = std::numeric_limits<double>::infinity();
  double accuracy = 0.0;
};

namespace detail {

inline Eigen::Index nearest(const Matrix& centroids, const auto& row) {
  const double d0 = (centroids.row(0) - row).squaredNorm();
  const double d1 = (centroids.row(1) - row).squaredNorm();
  return d1 < d0 ? 1 : 0;
}

// One Lloyd run with K = 2 from two distinct random seeds rows. When every row
// is identical both centroids coincide and the result is still well defined.
inline KMeansResult lloyd_two(const Matrix& x, const KMeansOptions& opt, Rng& rng) {
  const auto n = x.rows();
  KMeansResult r;
  r.centroids.resize(2, x.cols());
  const auto first = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
  r.centroids.row(0) = x.row(first);
  r.centroids.row(1) = x.row(first);
  for (int attempt = 0; attempt < 32; ++attempt) {
    const auto j = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
    if (x.row(j) != x.row(first)) {
      r.centroids.row(1) = x.row(j);
      break;
    }
  }

  std::vector<Eigen::Index> assign(static_cast<std::size_t>(n), 0);
  for (int it = 0; it < opt.max_iterations; ++it) {
    for (Eigen::Index i = 0; i < n; ++i) assign[static_cast<std::size_t>(i)] = nearest(r.centroids, x.row(i));
    Matrix next = Matrix::Zero(2, x.cols());
    std::array<Eigen::Index, 2> count{0, 0};
    for (Eigen::Index i = 0; i < n; ++i) {
      next.row(assign[static_cast<std::size_t>(i)]) += x.row(i);
      ++count[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])];
    }
    for (Eigen::Index c = 0; c < 2; ++c) {
      if (count[static_cast<std::size_t>(c)] > 0) {
        next.row(c) /= static_cast<double>(count[static_cast<std::size_t>(c)]);
        continue;
      }
      // Empty cluster: re-seed at the row farthest from the other centroid.
      const Eigen::Index other = 1 - c;
      Eigen::Index far = 0;
      double best = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double d = (x.row(i) - r.centroids.row(other)).squaredNorm();
        if (d > best) {
          best = d;
          far = i;
        }
      }
      next.row(c) = x.row(far);
    }
    const double moved = std::max((next.row(0) - r.centroids.row(0)).norm(),
                                  (next.row(1) - r.centroids.row(1)).norm());
    r.centroids = next;
    if (moved < opt.tolerance) break;
  }
  r.inertia = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    r.inertia += (x.row(i) - r.centroids.row(nearest(r.centroids, x.row(i)))).squaredNorm();
  return r;
}

}  // namespace detail

/// K-Means (K = 2) on concatenated tuples, best of `restarts` by inertia.
///
/// Test instances are assigned to the nearer of the two single-instance
/// centroids obtained by averaging each tuple centroid's M segments. The
/// reported accuracy is the better of the two cluster-to-class assignments.
inline KMeansResult kmeans_baseline(const MTupleBatch& tuples, const LabeledSet& test, std::uint64_t seed,
                                    const KMeansOptions& opt = {}) {
  if (tuples.size() == 0) throw std::invalid_argument("empty tuple batch");
  if (test.size() == 0) throw std::invalid_argument("empty test set");
  const int m = tuples.m();
  const auto dim = tuples.dim();
  if (test.features.cols() != dim) throw std::invalid_argument("test dimension mismatch");

  // Row i of the concatenated matrix is tuple i laid end to end.
  const Matrix x = Eigen::Map<const Matrix>(tuples.features().data(),
                                            static_cast<Eigen::Index>(tuples.size()), m * dim);

  KMeansResult best;
  for (int r = 0; r < opt.restarts; ++r) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    KMeansResult cur = detail::lloyd_two(x, opt, rng);
    if (cur.inertia < best.inertia) best = std::move(cur);
  }

  Matrix single = Matrix::Zero(2, dim);
  for (int j = 0; j < m; ++j) single += best.centroids.middleCols(j * dim, dim);
  single /= static_cast<double>(m);

  std::size_t agree = 0;  // cluster 0 <-> positive
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto c = detail::nearest(single, test.features.row(static_cast<Eigen::Index>(i)));
    agree += ((c == 0) == (test.labels[i] == Label::Positive));
  }
  const double acc = static_cast<double>(agree) / static_cast<double>(test.size());
  best.accuracy = std::max(acc, 1.0 - acc);
  return best;
}

}  // namespace mdpu
