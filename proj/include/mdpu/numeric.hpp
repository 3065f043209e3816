#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>

#include "mdpu/problem.hpp"

namespace mdpu {

namespace detail {

using PascalTable = std::array<std::array<std::uint64_t, kMaxTupleSize + 1>, kMaxTupleSize + 1>;

inline constexpr PascalTable make_pascal_table() {
  PascalTable t{};
  for (int n = 0; n <= kMaxTupleSize; ++n) {
    t[n][0] = 1;
    for (int k = 1; k <= n; ++k) t[n][k] = t[n - 1][k - 1] + (k < n ? t[n - 1][k] : 0);
  }
  return t;
}

inline constexpr PascalTable kPascal = make_pascal_table();

}  // namespace detail

/// Exact binomial coefficient C(n, k) for 0 <= n <= 64. Returns 0 when k is
/// outside [0, n]. C(64, 32) still fits in 64 unsigned bits.
inline constexpr std::uint64_t binomial(int n, int k) {
  if (n < 0 || n > kMaxTupleSize) throw std::out_of_range("binomial: n outside [0, 64]");
  if (k < 0 || k > n) return 0;
  return detail::kPascal[n][k];
}

/// Pairwise (cascade) summation with a fixed split layout, so the result is
/// independent of anything but the input order.
inline double pairwise_sum(std::span<const double> xs) {
  constexpr std::size_t kLeaf = 8;
  if (xs.size() <= kLeaf) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

inline double pairwise_mean(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("mean of empty sequence");
  return pairwise_sum(xs) / static_cast<double>(xs.size());
}

}  // namespace mdpu
