#include "mtlsa/confweight.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

#include "mtlsa/errors.hpp"

namespace mtlsa {

Matrix distance_matrix(std::span<const std::vector<double>> features) {
  if (features.empty()) throw std::invalid_argument("distance_matrix: no points");
  const std::size_t n = features.size();
  const std::size_t dim = features.front().size();
  for (std::size_t i = 0; i < n; ++i) {
    if (features[i].size() != dim) {
      throw ShapeError("distance_matrix: point " + std::to_string(i) + " has dimension " +
                       std::to_string(features[i].size()) + ", expected " + std::to_string(dim));
    }
  }
  Matrix d(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = squared_distance(features[i], features[j]);
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return d;
}

double density_cutoff(const Matrix& distances, double kappa) {
  if (!(kappa > 0.0 && kappa < 1.0)) throw DomainError("kappa must lie in (0,1)");
  if (distances.rows() != distances.cols() || distances.empty()) {
    throw ShapeError("density_cutoff: distance matrix must be square and nonempty");
  }
  std::vector<double> entries(distances.values().begin(), distances.values().end());
  const auto total = static_cast<double>(entries.size());
  // The small slack keeps products like 0.6 * 25 = 15.000000000000002 at 15.
  auto position = static_cast<std::size_t>(std::ceil(kappa * total - 1e-9));
  position = std::clamp<std::size_t>(position, 1, entries.size());
  auto nth = entries.begin() + static_cast<std::ptrdiff_t>(position - 1);
  std::nth_element(entries.begin(), nth, entries.end());
  return *nth;
}

std::vector<std::size_t> local_density(const Matrix& distances, double cutoff) {
  if (distances.rows() != distances.cols()) throw ShapeError("local_density: matrix not square");
  std::vector<std::size_t> rho(distances.rows(), 0);
  for (std::size_t i = 0; i < distances.rows(); ++i) {
    for (double v : distances.row(i)) {
      if (v < cutoff) ++rho[i];
    }
  }
  return rho;
}

ConfidenceWeights confidence_weights(std::span<const LabelVector> softs,
                                     std::span<const std::vector<double>> features,
                                     double kappa) {
  if (softs.size() != features.size()) {
    throw ShapeError("confidence_weights: " + std::to_string(softs.size()) + " labels vs " +
                     std::to_string(features.size()) + " feature vectors");
  }
  if (softs.empty()) throw std::invalid_argument("confidence_weights: empty input");

  const std::size_t n = softs.size();
  ConfidenceWeights out;
  out.pseudo_class.resize(n);
  out.w_c.resize(n);
  out.w_d.assign(n, 1.0);
  out.w_s.resize(n);

  std::map<std::size_t, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < n; ++i) {
    out.pseudo_class[i] = softs[i].argmax();
    out.w_c[i] = confidence_score(softs[i]);
    members[out.pseudo_class[i]].push_back(i);
  }

  for (auto& [cls, idx] : members) {
    DensityGroup g;
    g.pseudo_class = cls;
    g.member_indices = std::move(idx);
    std::vector<std::vector<double>> group_features;
    group_features.reserve(g.member_indices.size());
    for (auto i : g.member_indices) group_features.push_back(features[i]);
    g.distances = distance_matrix(group_features);
    g.cutoff = density_cutoff(g.distances, kappa);
    g.densities = local_density(g.distances, g.cutoff);
    const auto peak = *std::max_element(g.densities.begin(), g.densities.end());
    if (peak > 0) {
      for (std::size_t m = 0; m < g.member_indices.size(); ++m) {
        out.w_d[g.member_indices[m]] =
            static_cast<double>(g.densities[m]) / static_cast<double>(peak);
      }
    }
    out.groups.push_back(std::move(g));
  }

  for (std::size_t i = 0; i < n; ++i) out.w_s[i] = out.w_c[i] * out.w_d[i];
  return out;
}

}  // namespace mtlsa
