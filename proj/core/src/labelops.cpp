#include "mtlsa/labelops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mtlsa/errors.hpp"

namespace mtlsa {

LabelVector::LabelVector(std::vector<double> entries) : p_(std::move(entries)) {
  if (p_.size() < 2) throw DomainError("label vector needs at least two classes");
  double sum = 0.0;
  for (double v : p_) {
    if (!std::isfinite(v) || v < 0.0) {
      throw DomainError("label vector entry out of range: " + std::to_string(v));
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    throw DomainError("label vector does not sum to 1 (sum=" + std::to_string(sum) + ")");
  }
}

LabelVector LabelVector::one_hot(std::size_t index, std::size_t num_classes) {
  if (index >= num_classes) throw DomainError("one_hot index out of range");
  std::vector<double> v(num_classes, 0.0);
  v[index] = 1.0;
  return LabelVector(std::move(v));
}

LabelVector LabelVector::uniform(std::size_t num_classes) {
  return LabelVector(std::vector<double>(num_classes, 1.0 / static_cast<double>(num_classes)));
}

std::size_t LabelVector::argmax() const noexcept {
  std::size_t best = 0;
  for (std::size_t k = 1; k < p_.size(); ++k) {
    if (p_[k] > p_[best]) best = k;
  }
  return best;
}

double LabelVector::max() const noexcept { return p_[argmax()]; }

LabelVector to_pseudo(const LabelVector& soft) {
  return LabelVector::one_hot(soft.argmax(), soft.size());
}

LabelVector sharpen(const LabelVector& soft, double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw DomainError("temperature must be positive and finite");
  }
  if (temperature == 1.0) return soft;
  const double exponent = 1.0 / temperature;
  std::vector<double> out(soft.size());
  double total = 0.0;
  for (std::size_t k = 0; k < soft.size(); ++k) {
    out[k] = std::pow(std::max(soft[k], kSharpenFloor), exponent);
    total += out[k];
  }
  for (double& v : out) v /= total;
  return LabelVector(std::move(out));
}

LabelVector interpolate(const LabelVector& pseudo, const LabelVector& soft, double w) {
  if (pseudo.size() != soft.size()) throw ShapeError("interpolate: label length mismatch");
  if (!(w >= 0.0 && w <= 1.0)) throw DomainError("interpolation weight outside [0,1]");
  std::vector<double> out(pseudo.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = w * pseudo[k] + (1.0 - w) * soft[k];
  return LabelVector(std::move(out));
}

}  // namespace mtlsa
