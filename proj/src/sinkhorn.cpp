#include "uwnerf/sinkhorn.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace uwnerf::sinkhorn {

DiscreteDistribution DiscreteDistribution::uniform(std::vector<Eigen::Vector3d> pts) {
  DiscreteDistribution d;
  d.weights = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(pts.size()),
                                        1.0 / static_cast<double>(pts.size()));
  d.weights /= d.weights.sum();
  d.points = std::move(pts);
  return d;
}

void DiscreteDistribution::validate() const {
  if (points.empty()) throw std::invalid_argument("DiscreteDistribution: empty support");
  if (weights.size() != static_cast<Eigen::Index>(points.size())) {
    throw std::invalid_argument("DiscreteDistribution: weight/point count mismatch");
  }
  for (const auto& p : points) {
    if (!p.allFinite()) throw std::invalid_argument("DiscreteDistribution: non-finite point");
  }
  if ((weights.array() < 0).any()) {
    throw std::invalid_argument("DiscreteDistribution: negative weight");
  }
  if (std::abs(weights.sum() - 1.0) > 1e-12) {
    throw std::invalid_argument("DiscreteDistribution: weights must sum to 1");
  }
}

void SinkhornConfig::validate() const {
  if (!(reg_lambda > 0)) throw std::invalid_argument("SinkhornConfig: reg_lambda must be > 0");
  if (max_iters < 1) throw std::invalid_argument("SinkhornConfig: max_iters must be >= 1");
  if (!(marginal_tol > 0)) throw std::invalid_argument("SinkhornConfig: marginal_tol must be > 0");
}

CostMatrix cost_matrix(const DiscreteDistribution& mu,
                       const DiscreteDistribution& nu, CostMetric metric) {
  mu.validate();
  nu.validate();
  CostMatrix out;
  out.metric = metric;
  out.m.resize(mu.size(), nu.size());
  for (int i = 0; i < mu.size(); ++i) {
    for (int j = 0; j < nu.size(); ++j) {
      double d2 = (mu.points[i] - nu.points[j]).squaredNorm();
      out.m(i, j) = metric == CostMetric::kSquaredEuclidean ? d2 : std::sqrt(d2);
    }
  }
  return out;
}

namespace {

double log_sum_exp(const Eigen::Ref<const Eigen::ArrayXd>& x) {
  double m = x.maxCoeff();
  if (!std::isfinite(m)) return m;  // all -inf
  return m + std::log((x - m).exp().sum());
}

struct Marginals {
  double row_err;
  double col_err;
};

Marginals marginal_error(const Eigen::MatrixXd& plan, const Eigen::VectorXd& a,
                         const Eigen::VectorXd& b) {
  return {(plan.rowwise().sum() - a).cwiseAbs().maxCoeff(),
          (plan.colwise().sum().transpose() - b).cwiseAbs().maxCoeff()};
}

TransportPlan solve_log_domain(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                               const Eigen::MatrixXd& m, const SinkhornConfig& cfg) {
  const Eigen::Index n = a.size(), mm = b.size();
  const double lam = cfg.reg_lambda;
  Eigen::ArrayXd log_a = a.array().log();
  Eigen::ArrayXd log_b = b.array().log();
  Eigen::VectorXd f = Eigen::VectorXd::Zero(n), g = Eigen::VectorXd::Zero(mm);
  Eigen::ArrayXXd z(n, mm);

  TransportPlan result;
  for (int it = 1; it <= cfg.max_iters; ++it) {
    // g_j <- (log b_j - LSE_i(lam (f_i - M_ij))) / lam
    z = (-lam) * m.array();
    z.colwise() += lam * f.array();
    for (Eigen::Index j = 0; j < mm; ++j) {
      g[j] = (log_b[j] - log_sum_exp(z.col(j))) / lam;
    }
    // f_i <- (log a_i - LSE_j(lam (g_j - M_ij))) / lam
    z = (-lam) * m.array();
    z.rowwise() += lam * g.transpose().array();
    for (Eigen::Index i = 0; i < n; ++i) {
      f[i] = (log_a[i] - log_sum_exp(z.row(i).transpose())) / lam;
    }
    // Plan and marginal check. The f-update makes row sums exact, so the
    // column error is the live convergence measure.
    z.colwise() += lam * f.array();
    result.plan = z.exp().matrix();
    result.iterations = it;
    auto [row_err, col_err] = marginal_error(result.plan, a, b);
    if (row_err <= cfg.marginal_tol && col_err <= cfg.marginal_tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

TransportPlan solve_naive(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                          const Eigen::MatrixXd& m, const SinkhornConfig& cfg) {
  const double lam = cfg.reg_lambda;
  Eigen::MatrixXd k = (-lam * m.array()).exp().matrix();
  if ((k.rowwise().sum().array() == 0).any() || (k.colwise().sum().array() == 0).any()) {
    throw std::runtime_error(
        "sinkhorn: kernel underflow (lambda*cost too large for exp); "
        "use log-domain mode (SinkhornConfig::log_domain = true, the default)");
  }
  Eigen::VectorXd u = Eigen::VectorXd::Ones(a.size());
  Eigen::VectorXd v = Eigen::VectorXd::Ones(b.size());
  TransportPlan result;
  for (int it = 1; it <= cfg.max_iters; ++it) {
    Eigen::VectorXd kv = k * v;
    if ((kv.array() == 0).any()) {
      throw std::runtime_error(
          "sinkhorn: scaling underflow in naive mode; use log-domain mode");
    }
    u = a.cwiseQuotient(kv);
    Eigen::VectorXd ktu = k.transpose() * u;
    if ((ktu.array() == 0).any()) {
      throw std::runtime_error(
          "sinkhorn: scaling underflow in naive mode; use log-domain mode");
    }
    v = b.cwiseQuotient(ktu);
    result.plan = u.asDiagonal() * k * v.asDiagonal();
    result.iterations = it;
    auto [row_err, col_err] = marginal_error(result.plan, a, b);
    if (row_err <= cfg.marginal_tol && col_err <= cfg.marginal_tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace

TransportPlan solve(const DiscreteDistribution& mu, const DiscreteDistribution& nu,
                    const SinkhornConfig& config) {
  config.validate();
  CostMatrix cm = cost_matrix(mu, nu, config.metric);

  // Atoms with zero weight receive zero plan mass; drop them so that the
  // log-domain potentials stay finite, then re-insert empty rows/columns.
  std::vector<int> rows, cols;
  for (int i = 0; i < mu.size(); ++i) {
    if (mu.weights[i] > 0) rows.push_back(i);
  }
  for (int j = 0; j < nu.size(); ++j) {
    if (nu.weights[j] > 0) cols.push_back(j);
  }
  Eigen::VectorXd a(rows.size()), b(cols.size());
  Eigen::MatrixXd m(rows.size(), cols.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    a[static_cast<Eigen::Index>(i)] = mu.weights[rows[i]];
    for (size_t j = 0; j < cols.size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          cm.m(rows[i], cols[j]);
    }
  }
  for (size_t j = 0; j < cols.size(); ++j) {
    b[static_cast<Eigen::Index>(j)] = nu.weights[cols[j]];
  }

  TransportPlan reduced = config.log_domain ? solve_log_domain(a, b, m, config)
                                            : solve_naive(a, b, m, config);
  reduced.cost = (reduced.plan.array() * m.array()).sum();

  if (rows.size() == static_cast<size_t>(mu.size()) &&
      cols.size() == static_cast<size_t>(nu.size())) {
    return reduced;
  }
  TransportPlan full;
  full.cost = reduced.cost;
  full.iterations = reduced.iterations;
  full.converged = reduced.converged;
  full.plan = Eigen::MatrixXd::Zero(mu.size(), nu.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    for (size_t j = 0; j < cols.size(); ++j) {
      full.plan(rows[i], cols[j]) =
          reduced.plan(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  return full;
}

double loss(const DiscreteDistribution& mu, const DiscreteDistribution& nu,
            const SinkhornConfig& config) {
  return solve(mu, nu, config).cost;
}

}  // namespace uwnerf::sinkhorn
