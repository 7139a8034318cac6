#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mtlsa/matrix.hpp"

namespace mtlsa {

inline constexpr double kDefaultLambda = 0.1;
inline constexpr std::size_t kDefaultClusters = 4;

struct GmmOptions {
  std::size_t max_iterations = 100;
  double relative_tolerance = 1e-8;  // stop when |dLL| < tol * |LL|
  double variance_floor = 1e-6;
};

/// Spherical Gaussian mixture summary of one domain.
struct ClusterModel {
  std::vector<std::vector<double>> means;
  std::vector<double> priors;
  std::vector<double> variances;
  Matrix responsibilities;  // n x K, rows on the simplex
  /// Log-likelihood after the initial E-step and after every M-step.
  std::vector<double> log_likelihood_trace;

  std::size_t num_clusters() const noexcept { return means.size(); }
  std::size_t dimension() const noexcept { return means.empty() ? 0 : means.front().size(); }
};

/// EM for a spherical GMM with k-means++ seeding.
/// Throws ConfigError when K == 0 or K > n, ShapeError on ragged features.
ClusterModel fit_gmm(std::span<const std::vector<double>> features, std::size_t num_clusters,
                     std::uint64_t seed, const GmmOptions& options = {});

/// Squared Euclidean distance between two cluster means.
double mmd_cluster_distance(std::span<const double> mean_b, std::span<const double> mean_a);

/// K_b x K_a matrix of mmd_cluster_distance.
Matrix mmd_matrix(const ClusterModel& model_b, const ClusterModel& model_a);

struct TransportPlan {
  Matrix flows;             // supplies x demands
  double total_work = 0.0;  // sum h * d
  double total_flow = 0.0;  // sum h
  double total_cost = 0.0;  // total_work / total_flow (0 when nothing flows)
};

/// Exact balanced transportation problem: transportation simplex from a
/// northwest corner start, Dantzig pricing with a Bland fallback. Supplies and
/// demands must be nonnegative with totals equal within 1e-6; violations throw
/// std::invalid_argument.
TransportPlan solve_emd(std::span<const double> supplies, std::span<const double> demands,
                        const Matrix& costs);

/// d^E_k: EMD between a unit mass at mean_b[k] and domain A's weighted means.
std::vector<double> cluster_to_domain_distance(const ClusterModel& model_b,
                                               const ClusterModel& model_a);

/// Plain MMD to the whole labeled domain: d_k = ||mean_b[k] - centroid(features_a)||^2.
std::vector<double> cluster_to_mean_distance(const ClusterModel& model_b,
                                             std::span<const std::vector<double>> features_a);

struct DistributionWeights {
  std::vector<double> h_hat;  // sum_k d_k * gamma_{i,k}
  std::vector<double> w_g;    // exp(-lambda * h_hat)
};

/// Throws DomainError for lambda <= 0, ShapeError if distances.size() != K.
DistributionWeights distribution_weights(const ClusterModel& model_b,
                                         std::span<const double> cluster_distances,
                                         double lambda = kDefaultLambda);

}  // namespace mtlsa
