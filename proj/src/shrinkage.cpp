#include "coolish/shrinkage.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <string>

namespace coolish {

namespace {

constexpr double kGramTol = 1e-12;  // relative eigenvalue cutoff

void check_theta(const ShrinkagePoint& pt, const Eigen::VectorXd& theta,
                 const char* where) {
  if (theta.size() != pt.p() + 1) {
    throw ShapeMismatch(std::string(where) + ": theta has length " +
                        std::to_string(theta.size()) + ", expected " +
                        std::to_string(pt.p() + 1));
  }
}

// Shared quadratic core: both the feasible and oracle solvers minimize
//   f(theta) = (1/q) ||target - x_tilde theta||^2 + 2 penalty^T theta
// over all of R^{p+1} or over the box. The feasible problem uses
// target = y0_hat and penalty = q_vec; the oracles use target = B^T x0 and
// zero penalty.

Eigen::VectorXd solve_quadratic(const Eigen::MatrixXd& x_tilde,
                                const Eigen::VectorXd& target,
                                const Eigen::VectorXd& penalty,
                                double* kkt_out) {
  const Eigen::Index q = x_tilde.rows();
  const Eigen::Index d = x_tilde.cols();
  if (q <= d) {
    throw IllPosed("closed-form solve needs q > p+1, got q=" +
                   std::to_string(q) + ", p+1=" + std::to_string(d));
  }
  const Eigen::MatrixXd gram = x_tilde.transpose() * x_tilde;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram,
                                                     Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (lo < kGramTol * hi || hi <= 0.0) {
    throw IllPosed("x_tilde^T x_tilde is singular within tolerance");
  }
  const Eigen::VectorXd rhs =
      x_tilde.transpose() * target - double(q) * penalty;
  const Eigen::VectorXd theta = Eigen::LLT<Eigen::MatrixXd>(gram).solve(rhs);
  if (kkt_out) {
    const Eigen::VectorXd grad =
        (2.0 / double(q)) * (gram * theta - x_tilde.transpose() * target) +
        2.0 * penalty;
    *kkt_out = grad.lpNorm<Eigen::Infinity>();
  }
  return theta;
}

struct BoxResult {
  Eigen::VectorXd theta;
  int iterations = 0;
  double kkt_residual = 0.0;
  bool converged = false;
};

// KKT residual over the box: interior coordinates need a vanishing gradient,
// coordinates at a bound need the gradient pointing outward.
double box_kkt(const Eigen::VectorXd& theta, const Eigen::VectorXd& grad,
               const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    double viol;
    if (theta[j] <= lo[j]) {
      viol = std::max(0.0, -grad[j]);
    } else if (theta[j] >= hi[j]) {
      viol = std::max(0.0, grad[j]);
    } else {
      viol = std::abs(grad[j]);
    }
    worst = std::max(worst, viol);
  }
  return worst;
}

BoxResult solve_box(const Eigen::MatrixXd& x_tilde,
                    const Eigen::VectorXd& target,
                    const Eigen::VectorXd& penalty, double bound, double tol,
                    int max_iter, Eigen::VectorXd start) {
  const Eigen::Index q = x_tilde.rows();
  const Eigen::Index d = x_tilde.cols();
  const double inv_q = 1.0 / double(q);

  Eigen::VectorXd lo = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd hi = Eigen::VectorXd::Constant(d, bound);
  lo[0] = -bound;

  const Eigen::MatrixXd gram = x_tilde.transpose() * x_tilde;
  const Eigen::VectorXd lin = x_tilde.transpose() * target;

  BoxResult res;
  res.theta = start.cwiseMax(lo).cwiseMin(hi);
  Eigen::VectorXd& theta = res.theta;

  Eigen::VectorXd grad(d);
  for (int sweep = 0; sweep < max_iter; ++sweep) {
    // Fresh gradient each sweep keeps incremental updates from drifting.
    grad = 2.0 * inv_q * (gram * theta - lin) + 2.0 * penalty;
    bool small_step = true;
    for (Eigen::Index j = 0; j < d; ++j) {
      const double curv = 2.0 * inv_q * gram(j, j);
      double proposal;
      if (curv > 0.0) {
        proposal = theta[j] - grad[j] / curv;
      } else if (grad[j] > 0.0) {
        proposal = lo[j];  // objective linear in theta_j, slide downhill
      } else if (grad[j] < 0.0) {
        proposal = hi[j];
      } else {
        proposal = theta[j];
      }
      const double updated = std::min(hi[j], std::max(lo[j], proposal));
      const double delta = updated - theta[j];
      if (delta != 0.0) {
        theta[j] = updated;
        grad += (2.0 * inv_q * delta) * gram.col(j);
      }
      if (std::abs(delta) > tol * (1.0 + std::abs(updated))) {
        small_step = false;
      }
    }
    res.iterations = sweep + 1;
    grad = 2.0 * inv_q * (gram * theta - lin) + 2.0 * penalty;
    res.kkt_residual = box_kkt(theta, grad, lo, hi);
    if (small_step && res.kkt_residual <= tol) {
      res.converged = true;
      break;
    }
  }
  if (res.iterations == 0) {  // max_iter == 0: report the start point
    grad = 2.0 * inv_q * (gram * theta - lin) + 2.0 * penalty;
    res.kkt_residual = box_kkt(theta, grad, lo, hi);
  }
  return res;
}

// Warm start for the box solver: the clipped closed-form minimizer when it
// exists, otherwise the clipped least squares weights.
Eigen::VectorXd box_start(const Eigen::MatrixXd& x_tilde,
                          const Eigen::VectorXd& target,
                          const Eigen::VectorXd& penalty) {
  try {
    return solve_quadratic(x_tilde, target, penalty, nullptr);
  } catch (const IllPosed&) {
    return theta_ols(x_tilde.cols() - 1);
  }
}

}  // namespace

Eigen::VectorXd theta_ols(Eigen::Index p) {
  Eigen::VectorXd theta = Eigen::VectorXd::Ones(p + 1);
  theta[0] = 0.0;
  return theta;
}

ShrinkagePoint build_point(const OlsFit& fit, const Eigen::VectorXd& x0) {
  const PredictiveMoments m = predictive_moments(fit, x0);
  const Eigen::Index p = fit.p;
  const Eigen::Index q = fit.q;

  ShrinkagePoint pt;
  pt.x0 = x0;
  pt.y0_hat = m.y0_hat;
  pt.sigma2_0 = m.sigma2_0;
  pt.c_x0 = m.c_x0;

  pt.x_tilde.resize(q, p + 1);
  pt.x_tilde.col(0).setOnes();
  for (Eigen::Index j = 0; j < p; ++j) {
    pt.x_tilde.col(j + 1) = x0[j] * fit.B_hat.row(j).transpose();
  }

  const double mean_sigma2 = q > 0 ? fit.sigma2_hat.mean() : 0.0;
  pt.q_vec.resize(p + 1);
  pt.q_vec[0] = 0.0;
  for (Eigen::Index j = 0; j < p; ++j) {
    pt.q_vec[j + 1] = x0[j] * m.w[j] * mean_sigma2;
  }
  return pt;
}

double empirical_risk(const ShrinkagePoint& pt, const Eigen::VectorXd& theta) {
  check_theta(pt, theta, "empirical_risk");
  const double inv_q = 1.0 / double(pt.q());
  const double fit_term =
      (pt.y0_hat - pt.x_tilde * theta).squaredNorm() * inv_q;
  return -pt.sigma2_0.mean() + fit_term + 2.0 * pt.q_vec.dot(theta);
}

Eigen::VectorXd empirical_risk_gradient(const ShrinkagePoint& pt,
                                        const Eigen::VectorXd& theta) {
  check_theta(pt, theta, "empirical_risk_gradient");
  const double inv_q = 1.0 / double(pt.q());
  return -2.0 * inv_q *
             (pt.x_tilde.transpose() * (pt.y0_hat - pt.x_tilde * theta)) +
         2.0 * pt.q_vec;
}

ThetaSolution solve_unconstrained(const ShrinkagePoint& pt) {
  ThetaSolution sol;
  sol.mode = SolverMode::Unconstrained;
  sol.box_bound = std::numeric_limits<double>::quiet_NaN();
  sol.theta = solve_quadratic(pt.x_tilde, pt.y0_hat, pt.q_vec,
                              &sol.kkt_residual);
  sol.empirical_risk = empirical_risk(pt, sol.theta);
  sol.iterations = 1;
  return sol;
}

ThetaSolution solve_constrained(const ShrinkagePoint& pt, double M, double tol,
                                int max_iter,
                                const Eigen::VectorXd* warm_start) {
  if (!(M > 0.0)) {
    throw InvalidBound("solve_constrained: M must be positive, got " +
                       std::to_string(M));
  }
  if (warm_start) check_theta(pt, *warm_start, "solve_constrained");
  const Eigen::VectorXd start =
      warm_start ? *warm_start : box_start(pt.x_tilde, pt.y0_hat, pt.q_vec);
  const BoxResult box =
      solve_box(pt.x_tilde, pt.y0_hat, pt.q_vec, M, tol, max_iter, start);

  ThetaSolution sol;
  sol.mode = SolverMode::Constrained;
  sol.box_bound = M;
  sol.theta = box.theta;
  sol.iterations = box.iterations;
  sol.kkt_residual = box.kkt_residual;
  sol.converged = box.converged;
  sol.empirical_risk = empirical_risk(pt, sol.theta);
  return sol;
}

Eigen::VectorXd predict_point(const OlsFit& fit, const Eigen::VectorXd& x0,
                              Rule rule, double M) {
  const ShrinkagePoint pt = build_point(fit, x0);
  switch (rule) {
    case Rule::Ols:
      return pt.y0_hat;
    case Rule::Unconstrained:
      return pt.x_tilde * solve_unconstrained(pt).theta;
    case Rule::Constrained:
      return pt.x_tilde * solve_constrained(pt, M).theta;
  }
  throw InvalidConfig("predict_point: unknown rule");
}

double true_loss(const ShrinkagePoint& pt, const Eigen::MatrixXd& B,
                 const Eigen::VectorXd& theta) {
  check_theta(pt, theta, "true_loss");
  if (B.rows() != pt.p() || B.cols() != pt.q()) {
    throw ShapeMismatch("true_loss: B is " + std::to_string(B.rows()) + "x" +
                        std::to_string(B.cols()) + ", expected " +
                        std::to_string(pt.p()) + "x" + std::to_string(pt.q()));
  }
  const Eigen::VectorXd mu0 = B.transpose() * pt.x0;
  return (mu0 - pt.x_tilde * theta).squaredNorm() / double(pt.q());
}

ThetaSolution oracle_unconstrained(const ShrinkagePoint& pt,
                                   const Eigen::MatrixXd& B) {
  const Eigen::VectorXd mu0 = B.transpose() * pt.x0;
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(pt.p() + 1);
  ThetaSolution sol;
  sol.mode = SolverMode::OracleUnconstrained;
  sol.box_bound = std::numeric_limits<double>::quiet_NaN();
  sol.theta = solve_quadratic(pt.x_tilde, mu0, zero, &sol.kkt_residual);
  sol.empirical_risk = true_loss(pt, B, sol.theta);
  sol.iterations = 1;
  return sol;
}

ThetaSolution oracle_constrained(const ShrinkagePoint& pt,
                                 const Eigen::MatrixXd& B, double M,
                                 double tol, int max_iter) {
  if (!(M > 0.0)) {
    throw InvalidBound("oracle_constrained: M must be positive, got " +
                       std::to_string(M));
  }
  const Eigen::VectorXd mu0 = B.transpose() * pt.x0;
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(pt.p() + 1);
  const BoxResult box = solve_box(pt.x_tilde, mu0, zero, M, tol, max_iter,
                                  box_start(pt.x_tilde, mu0, zero));
  ThetaSolution sol;
  sol.mode = SolverMode::OracleConstrained;
  sol.box_bound = M;
  sol.theta = box.theta;
  sol.iterations = box.iterations;
  sol.kkt_residual = box.kkt_residual;
  sol.converged = box.converged;
  sol.empirical_risk = true_loss(pt, B, sol.theta);
  return sol;
}

}  // namespace coolish
