#pragma once

#include <Eigen/Core>
#include <vector>

namespace uwnerf::sinkhorn {

enum class CostMetric { kSquaredEuclidean, kEuclidean };

// Weighted point cloud in RGB space. Weights live on the probability simplex.
// Points are 3-vectors by construction, so ground-cost dimensions always agree.
struct DiscreteDistribution {
  std::vector<Eigen::Vector3d> points;
  Eigen::VectorXd weights;

  static DiscreteDistribution uniform(std::vector<Eigen::Vector3d> pts);

  int size() const { return static_cast<int>(points.size()); }
  // Throws std::invalid_argument unless weights >= 0, sum to 1 within 1e-12,
  // points finite and size >= 1.
  void validate() const;
};

struct CostMatrix {
  Eigen::MatrixXd m;  // m(i, j) = d(x_i, y_j)
  CostMetric metric = CostMetric::kSquaredEuclidean;
};

// reg_lambda is the entropic weight 1/lambda on h(T): larger lambda means
// weaker regularization and a tighter approximation of the unregularized cost.
struct SinkhornConfig {
  double reg_lambda = 100.0;
  int max_iters = 1000;
  double marginal_tol = 1e-6;
  CostMetric metric = CostMetric::kSquaredEuclidean;
  bool log_domain = true;  // stabilized updates; the naive kernel underflows for large lambda

  void validate() const;
};

struct TransportPlan {
  Eigen::MatrixXd plan;   // n x m, nonnegative, marginals a and b
  double cost = 0.0;      // <T, M>: transport term only, no entropy
  int iterations = 0;
  bool converged = false;
};

CostMatrix cost_matrix(const DiscreteDistribution& mu,
                       const DiscreteDistribution& nu, CostMetric metric);

// Alternating scaling iterations until both marginal violations fall below
// config.marginal_tol or max_iters is reached. Throws std::runtime_error on
// kernel underflow in naive mode.
TransportPlan solve(const DiscreteDistribution& mu, const DiscreteDistribution& nu,
                    const SinkhornConfig& config);

// Transport cost <T, M> of the converged plan.
double loss(const DiscreteDistribution& mu, const DiscreteDistribution& nu,
            const SinkhornConfig& config);

}  // namespace uwnerf::sinkhorn
