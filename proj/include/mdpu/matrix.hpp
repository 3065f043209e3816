#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mdpu/problem.hpp"

namespace mdpu {

/// Row-major feature matrix; one instance per row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

inline std::span<const double> row_span(const Matrix& x, Eigen::Index r) {
  return {x.data() + r * x.cols(), static_cast<std::size_t>(x.cols())};
}

/// Copies the listed rows of `x` into a new matrix, in order.
inline Matrix gather_rows(const Matrix& x, std::span<const std::size_t> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

/// Features with known labels (test sets, pools).
struct LabeledSet {
  Matrix features;
  std::vector<Label> labels;

  std::size_t size() const { return labels.size(); }
  double positive_fraction() const {
    if (labels.empty()) return 0.0;
    std::size_t pos = 0;
    for (Label y : labels) pos += (y == Label::Positive);
    return static_cast<double>(pos) / static_cast<double>(labels.size());
  }
};

}  // namespace mdpu
