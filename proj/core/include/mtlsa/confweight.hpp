#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mtlsa/labelops.hpp"
#include "mtlsa/matrix.hpp"

namespace mtlsa {

inline constexpr double kDefaultKappa = 0.6;

/// Highest decision value of a soft label.
inline double confidence_score(const LabelVector& soft) { return soft.max(); }

/// Pairwise squared Euclidean distances. Exactly symmetric, zero diagonal.
/// Throws ShapeError on ragged input, std::invalid_argument on empty input.
Matrix distance_matrix(std::span<const std::vector<double>> features);

/// Entry at 1-based position ceil(kappa * n^2) of all n^2 entries sorted
/// ascending. kappa outside (0,1) throws DomainError.
double density_cutoff(const Matrix& distances, double kappa = kDefaultKappa);

/// rho_i = #{ j : D(i,j) < cutoff }, self included.
std::vector<std::size_t> local_density(const Matrix& distances, double cutoff);

/// One pseudo-class group: members, pairwise distances, cutoff and densities.
struct DensityGroup {
  std::size_t pseudo_class = 0;
  std::vector<std::size_t> member_indices;
  Matrix distances;
  double cutoff = 0.0;
  std::vector<std::size_t> densities;
};

/// Per-sample output of confidence_weights, aligned with the input order.
struct ConfidenceWeights {
  std::vector<std::size_t> pseudo_class;
  std::vector<double> w_c;  // confidence score
  std::vector<double> w_d;  // group-normalized local density
  std::vector<double> w_s;  // w_c * w_d
  std::vector<DensityGroup> groups;
};

/// Groups samples by pseudo label (argmax of the unsharpened soft label) and
/// computes w_c, w_d and w_s. A group whose densities are all zero gets w_d = 1.
/// Throws ShapeError on misaligned inputs, std::invalid_argument on empty input.
ConfidenceWeights confidence_weights(std::span<const LabelVector> softs,
                                     std::span<const std::vector<double>> features,
                                     double kappa = kDefaultKappa);

}  // namespace mtlsa
