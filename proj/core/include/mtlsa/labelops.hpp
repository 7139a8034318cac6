#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mtlsa {

/// A point on the probability simplex: ground-truth one-hot, soft label,
/// pseudo label or interpolated label.
///
/// Construction validates: at least two entries, all entries finite and
/// nonnegative, sum within 1e-9 of one. Violations throw DomainError.
class LabelVector {
 public:
  static constexpr double kSumTolerance = 1e-9;

  explicit LabelVector(std::vector<double> entries);

  static LabelVector one_hot(std::size_t index, std::size_t num_classes);
  static LabelVector uniform(std::size_t num_classes);

  std::size_t size() const noexcept { return p_.size(); }
  double operator[](std::size_t k) const { return p_[k]; }
  std::span<const double> entries() const noexcept { return p_; }

  /// Index of the largest entry; ties go to the lowest index.
  std::size_t argmax() const noexcept;
  double max() const noexcept;

  bool operator==(const LabelVector&) const = default;

 private:
  std::vector<double> p_;
};

/// Clamp applied to zero entries before the 1/T power in sharpen().
inline constexpr double kSharpenFloor = 1e-12;
inline constexpr double kDefaultTemperature = 2.0;

/// One-hot vector at argmax(soft).
LabelVector to_pseudo(const LabelVector& soft);

/// Power transform soft^(1/T) followed by renormalization. T <= 0 throws DomainError.
LabelVector sharpen(const LabelVector& soft, double temperature = kDefaultTemperature);

/// w * pseudo + (1 - w) * soft. w outside [0,1] throws DomainError; length
/// mismatch throws ShapeError.
LabelVector interpolate(const LabelVector& pseudo, const LabelVector& soft, double w);

}  // namespace mtlsa
