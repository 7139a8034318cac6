#include "mtlsa/distweight.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "mtlsa/errors.hpp"

namespace mtlsa {

namespace {

std::vector<std::size_t> kmeanspp_seeds(std::span<const std::vector<double>> x, std::size_t k,
                                        std::mt19937_64& rng) {
  const std::size_t n = x.size();
  std::vector<std::size_t> chosen;
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  chosen.push_back(pick(rng));
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  while (chosen.size() < k) {
    const auto& last = x[chosen.back()];
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], squared_distance(x[i], last));
      total += nearest[i];
    }
    if (!(total > 0.0)) {
      chosen.push_back(pick(rng));
      continue;
    }
    const double target = unit(rng) * total;
    double acc = 0.0;
    std::size_t next = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      acc += nearest[i];
      if (acc > target && nearest[i] > 0.0) {
        next = i;
        break;
      }
    }
    chosen.push_back(next);
  }
  return chosen;
}

// Fills gamma and returns the log-likelihood.
double expectation(std::span<const std::vector<double>> x, const ClusterModel& m, Matrix& gamma) {
  const std::size_t k = m.num_clusters();
  const auto dim = static_cast<double>(m.dimension());
  std::vector<double> log_terms(k);
  double ll = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      const double var = m.variances[c];
      log_terms[c] = std::log(m.priors[c]) -
                     0.5 * dim * std::log(2.0 * std::numbers::pi * var) -
                     squared_distance(x[i], m.means[c]) / (2.0 * var);
      peak = std::max(peak, log_terms[c]);
    }
    double s = 0.0;
    for (std::size_t c = 0; c < k; ++c) s += std::exp(log_terms[c] - peak);
    const double lse = peak + std::log(s);
    auto row = gamma.row(i);
    for (std::size_t c = 0; c < k; ++c) row[c] = std::exp(log_terms[c] - lse);
    ll += lse;
  }
  return ll;
}

void maximization(std::span<const std::vector<double>> x, const Matrix& gamma,
                  const GmmOptions& opt, ClusterModel& m) {
  const std::size_t n = x.size();
  const std::size_t dim = m.dimension();
  for (std::size_t c = 0; c < m.num_clusters(); ++c) {
    double mass = 0.0;
    for (std::size_t i = 0; i < n; ++i) mass += gamma(i, c);
    m.priors[c] = mass / static_cast<double>(n);
    if (!(mass > 1e-12)) continue;  // empty component keeps its mean and variance
    std::vector<double> mean(dim, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t d = 0; d < dim; ++d) mean[d] += gamma(i, c) * x[i][d];
    }
    for (double& v : mean) v /= mass;
    double spread = 0.0;
    for (std::size_t i = 0; i < n; ++i) spread += gamma(i, c) * squared_distance(x[i], mean);
    m.means[c] = std::move(mean);
    m.variances[c] =
        std::max(spread / (static_cast<double>(dim) * mass), opt.variance_floor);
  }
}

}  // namespace

ClusterModel fit_gmm(std::span<const std::vector<double>> features, std::size_t num_clusters,
                     std::uint64_t seed, const GmmOptions& options) {
  const std::size_t n = features.size();
  if (num_clusters == 0) throw ConfigError("fit_gmm: need at least one cluster");
  if (num_clusters > n) {
    throw ConfigError("fit_gmm: " + std::to_string(num_clusters) + " clusters for " +
                      std::to_string(n) + " samples");
  }
  const std::size_t dim = features.front().size();
  if (dim == 0) throw ShapeError("fit_gmm: zero-dimensional features");
  for (const auto& f : features) {
    if (f.size() != dim) throw ShapeError("fit_gmm: ragged features");
  }

  std::mt19937_64 rng(seed);
  ClusterModel m;
  for (auto idx : kmeanspp_seeds(features, num_clusters, rng)) m.means.push_back(features[idx]);

  std::vector<double> centroid(dim, 0.0);
  for (const auto& f : features) {
    for (std::size_t d = 0; d < dim; ++d) centroid[d] += f[d];
  }
  for (double& v : centroid) v /= static_cast<double>(n);
  double spread = 0.0;
  for (const auto& f : features) spread += squared_distance(f, centroid);
  const double init_var =
      std::max(spread / static_cast<double>(n * dim), options.variance_floor);
  m.variances.assign(num_clusters, init_var);
  m.priors.assign(num_clusters, 1.0 / static_cast<double>(num_clusters));
  m.responsibilities = Matrix(n, num_clusters);

  double ll = expectation(features, m, m.responsibilities);
  m.log_likelihood_trace.push_back(ll);
  for (std::size_t it = 0; it < options.max_iterations; ++it) {
    maximization(features, m.responsibilities, options, m);
    const double next = expectation(features, m, m.responsibilities);
    m.log_likelihood_trace.push_back(next);
    const bool converged = std::abs(next - ll) < options.relative_tolerance * std::abs(ll);
    ll = next;
    if (converged) break;
  }
  return m;
}

double mmd_cluster_distance(std::span<const double> mean_b, std::span<const double> mean_a) {
  return squared_distance(mean_b, mean_a);
}

Matrix mmd_matrix(const ClusterModel& model_b, const ClusterModel& model_a) {
  Matrix d(model_b.num_clusters(), model_a.num_clusters());
  for (std::size_t k = 0; k < d.rows(); ++k) {
    for (std::size_t j = 0; j < d.cols(); ++j) {
      d(k, j) = mmd_cluster_distance(model_b.means[k], model_a.means[j]);
    }
  }
  return d;
}

namespace {

// Transportation simplex over an explicit spanning-tree basis. Nodes 0..m-1 are
// supplies, m..m+n-1 demands; every basic cell (i,j) is a tree edge.
class TransportSimplex {
 public:
  TransportSimplex(std::span<const double> s, std::span<const double> d, const Matrix& c)
      : m_(s.size()), n_(d.size()), cost_(c), flow_(m_, n_), basic_(m_ * n_, 0) {
    northwest_corner(s, d);
  }

  void run() {
    double scale = 1.0;
    for (double v : cost_.values()) scale = std::max(scale, std::abs(v));
    const double tol = 1e-12 * scale;
    const std::size_t cap = 1000 * (m_ + n_) * (m_ + n_) + 1000;
    // Dantzig pricing, switching to Bland after a run of degenerate pivots so
    // the method cannot cycle.
    std::size_t degenerate_run = 0;
    for (std::size_t it = 0; it < cap; ++it) {
      compute_potentials();
      const bool bland = degenerate_run > m_ + n_;
      std::size_t enter = m_ * n_;
      double best = -tol;
      for (std::size_t cell = 0; cell < m_ * n_; ++cell) {
        if (basic_[cell]) continue;
        const std::size_t i = cell / n_, j = cell % n_;
        const double reduced = cost_(i, j) - u_[i] - v_[j];
        if (reduced < best) {
          enter = cell;
          if (bland) break;
          best = reduced;
        }
      }
      if (enter == m_ * n_) return;
      degenerate_run = pivot(enter) > 0.0 ? 0 : degenerate_run + 1;
    }
    throw std::runtime_error("solve_emd: pivot limit exceeded");
  }

  const Matrix& flows() const { return flow_; }

 private:
  void northwest_corner(std::span<const double> s, std::span<const double> d) {
    std::vector<double> rs(s.begin(), s.end()), rd(d.begin(), d.end());
    std::size_t i = 0, j = 0;
    while (true) {
      const double x = std::min(rs[i], rd[j]);
      flow_(i, j) = x;
      basic_[i * n_ + j] = 1;
      rs[i] -= x;
      rd[j] -= x;
      if (i == m_ - 1 && j == n_ - 1) break;
      if (i == m_ - 1) {
        ++j;
      } else if (j == n_ - 1) {
        ++i;
      } else if (rs[i] <= rd[j]) {
        ++i;
      } else {
        ++j;
      }
    }
  }

  std::vector<std::vector<std::size_t>> adjacency() const {
    std::vector<std::vector<std::size_t>> adj(m_ + n_);
    for (std::size_t cell = 0; cell < m_ * n_; ++cell) {
      if (!basic_[cell]) continue;
      const std::size_t i = cell / n_, j = cell % n_;
      adj[i].push_back(m_ + j);
      adj[m_ + j].push_back(i);
    }
    return adj;
  }

  void compute_potentials() {
    const auto adj = adjacency();
    u_.assign(m_, 0.0);
    v_.assign(n_, 0.0);
    std::vector<char> seen(m_ + n_, 0);
    std::vector<std::size_t> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      const std::size_t node = stack.back();
      stack.pop_back();
      for (std::size_t next : adj[node]) {
        if (seen[next]) continue;
        seen[next] = 1;
        if (node < m_) {
          v_[next - m_] = cost_(node, next - m_) - u_[node];
        } else {
          u_[next] = cost_(next, node - m_) - v_[node - m_];
        }
        stack.push_back(next);
      }
    }
  }

  // Tree path from supply node i to demand node m+j as a list of cells.
  std::vector<std::size_t> tree_path(std::size_t i, std::size_t j) const {
    const auto adj = adjacency();
    const std::size_t none = m_ + n_;
    std::vector<std::size_t> parent(m_ + n_, none);
    std::vector<std::size_t> stack{i};
    parent[i] = i;
    while (!stack.empty()) {
      const std::size_t node = stack.back();
      stack.pop_back();
      for (std::size_t next : adj[node]) {
        if (parent[next] != none) continue;
        parent[next] = node;
        stack.push_back(next);
      }
    }
    std::vector<std::size_t> path;
    for (std::size_t node = m_ + j; node != i; node = parent[node]) {
      const std::size_t prev = parent[node];
      const std::size_t row = node < m_ ? node : prev;
      const std::size_t col = (node < m_ ? prev : node) - m_;
      path.push_back(row * n_ + col);
    }
    return path;  // starts at the edge touching demand j
  }

  // Returns the amount of flow moved around the cycle.
  double pivot(std::size_t enter) {
    const std::size_t i = enter / n_, j = enter % n_;
    const auto path = tree_path(i, j);
    // Cycle: enter(+), then path cells alternate -, +, -, ... ending with '-'.
    double theta = std::numeric_limits<double>::infinity();
    std::size_t leave = m_ * n_;
    for (std::size_t p = 0; p < path.size(); p += 2) {
      const double f = flow_.values()[path[p]];
      if (f < theta || (f == theta && path[p] < leave)) {
        theta = f;
        leave = path[p];
      }
    }
    auto flows = flow_.values();
    flows[enter] += theta;
    for (std::size_t p = 0; p < path.size(); ++p) {
      if (p % 2 == 0) {
        flows[path[p]] -= theta;
      } else {
        flows[path[p]] += theta;
      }
    }
    flows[leave] = 0.0;
    basic_[leave] = 0;
    basic_[enter] = 1;
    return theta;
  }

  std::size_t m_, n_;
  const Matrix& cost_;
  Matrix flow_;
  std::vector<char> basic_;
  std::vector<double> u_, v_;
};

}  // namespace

TransportPlan solve_emd(std::span<const double> supplies, std::span<const double> demands,
                        const Matrix& costs) {
  if (supplies.empty() || demands.empty()) {
    throw std::invalid_argument("solve_emd: supplies and demands must be nonempty");
  }
  if (costs.rows() != supplies.size() || costs.cols() != demands.size()) {
    throw ShapeError("solve_emd: cost matrix is " + std::to_string(costs.rows()) + "x" +
                     std::to_string(costs.cols()) + ", expected " +
                     std::to_string(supplies.size()) + "x" + std::to_string(demands.size()));
  }
  double total_s = 0.0, total_d = 0.0;
  for (double s : supplies) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw std::invalid_argument("solve_emd: bad supply");
    total_s += s;
  }
  for (double d : demands) {
    if (!(d >= 0.0) || !std::isfinite(d)) throw std::invalid_argument("solve_emd: bad demand");
    total_d += d;
  }
  if (std::abs(total_s - total_d) > 1e-6) {
    throw std::invalid_argument("solve_emd: unbalanced problem (supply " +
                                std::to_string(total_s) + ", demand " + std::to_string(total_d) +
                                ")");
  }
  for (double c : costs.values()) {
    if (!(c >= 0.0) || !std::isfinite(c)) throw std::invalid_argument("solve_emd: bad cost");
  }

  TransportSimplex simplex(supplies, demands, costs);
  simplex.run();

  TransportPlan plan;
  plan.flows = simplex.flows();
  for (std::size_t i = 0; i < costs.rows(); ++i) {
    for (std::size_t j = 0; j < costs.cols(); ++j) {
      plan.total_work += plan.flows(i, j) * costs(i, j);
      plan.total_flow += plan.flows(i, j);
    }
  }
  plan.total_cost = plan.total_flow > 0.0 ? plan.total_work / plan.total_flow : 0.0;
  return plan;
}

std::vector<double> cluster_to_domain_distance(const ClusterModel& model_b,
                                               const ClusterModel& model_a) {
  if (model_b.dimension() != model_a.dimension()) {
    throw ShapeError("cluster_to_domain_distance: feature dimensions differ");
  }
  const Matrix dm = mmd_matrix(model_b, model_a);
  const std::vector<double> unit{1.0};
  std::vector<double> out(dm.rows());
  for (std::size_t k = 0; k < dm.rows(); ++k) {
    Matrix row(1, dm.cols());
    for (std::size_t j = 0; j < dm.cols(); ++j) row(0, j) = dm(k, j);
    out[k] = solve_emd(unit, model_a.priors, row).total_cost;
  }
  return out;
}

std::vector<double> cluster_to_mean_distance(const ClusterModel& model_b,
                                             std::span<const std::vector<double>> features_a) {
  if (features_a.empty()) throw std::invalid_argument("cluster_to_mean_distance: empty domain");
  std::vector<double> centroid(features_a.front().size(), 0.0);
  for (const auto& f : features_a) {
    if (f.size() != centroid.size()) throw ShapeError("cluster_to_mean_distance: ragged features");
    for (std::size_t d = 0; d < f.size(); ++d) centroid[d] += f[d];
  }
  for (double& v : centroid) v /= static_cast<double>(features_a.size());
  std::vector<double> out;
  out.reserve(model_b.num_clusters());
  for (const auto& mean : model_b.means) out.push_back(mmd_cluster_distance(mean, centroid));
  return out;
}

DistributionWeights distribution_weights(const ClusterModel& model_b,
                                         std::span<const double> cluster_distances,
                                         double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw DomainError("lambda must be positive");
  if (cluster_distances.size() != model_b.num_clusters()) {
    throw ShapeError("distribution_weights: one distance per cluster required");
  }
  const Matrix& gamma = model_b.responsibilities;
  DistributionWeights out;
  out.h_hat.resize(gamma.rows());
  out.w_g.resize(gamma.rows());
  for (std::size_t i = 0; i < gamma.rows(); ++i) {
    double h = 0.0;
    for (std::size_t k = 0; k < gamma.cols(); ++k) h += cluster_distances[k] * gamma(i, k);
    out.h_hat[i] = h;
    out.w_g[i] = std::exp(-lambda * h);
  }
  return out;
}

}  // namespace mtlsa
