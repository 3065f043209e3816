#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace mdpu {

/// Largest tuple size accepted anywhere in the library. Tuple weights
/// underflow in double precision beyond this for skewed priors.
inline constexpr int kMaxTupleSize = 64;

/// Binary class label. The underlying value is the usual +1 / -1 encoding.
enum class Label : std::int8_t { Negative = -1, Positive = 1 };

inline constexpr double sign(Label y) { return static_cast<double>(static_cast<std::int8_t>(y)); }

inline Label label_from_int(int z) {
  if (z == 1) return Label::Positive;
  if (z == -1) return Label::Negative;
  throw std::invalid_argument("label must be +1 or -1, got " + std::to_string(z));
}

/// Class prior and tuple size. Every distribution coefficient is a function of
/// these two numbers.
class ProblemSpec {
 public:
  ProblemSpec(double pi_plus, int m) : pi_plus_(pi_plus), m_(m) {
    if (!(pi_plus > 0.0 && pi_plus < 1.0))
      throw std::domain_error("class prior must lie in the open interval (0,1), got " +
                              std::to_string(pi_plus));
    if (m < 1) throw std::domain_error("tuple size must be >= 1, got " + std::to_string(m));
    if (m > kMaxTupleSize)
      throw std::domain_error("tuple size must be <= " + std::to_string(kMaxTupleSize) +
                              ", got " + std::to_string(m));
  }

  double pi_plus() const { return pi_plus_; }
  double pi_minus() const { return 1.0 - pi_plus_; }
  int m() const { return m_; }
  /// Largest admissible negative count inside a tuple.
  int max_negatives() const { return m_ / 2; }
  /// Weight of the tuple term in the empirical risk.
  double prior_product() const { return pi_plus_ * (1.0 - pi_plus_); }

  friend bool operator==(const ProblemSpec&, const ProblemSpec&) = default;

 private:
  double pi_plus_;
  int m_;
};

}  // namespace mdpu
