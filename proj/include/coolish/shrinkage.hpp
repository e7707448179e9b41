#pragma once

#include <Eigen/Dense>

#include "coolish/ols.hpp"

namespace coolish {

// Everything the shrinkage rule needs at one test covariate x0: the least
// squares predictions y0_hat, the feature matrix whose k-th row is
// (1, x0_1 B_hat_{1k}, ..., x0_p B_hat_{pk}), the bias-correction vector
// q_vec, and the predictive variances.
struct ShrinkagePoint {
  Eigen::VectorXd x0;        // length p
  Eigen::VectorXd y0_hat;    // length q
  Eigen::MatrixXd x_tilde;   // q x (p+1); column 0 is all ones
  Eigen::VectorXd q_vec;     // length p+1; q_vec[0] = 0
  Eigen::VectorXd sigma2_0;  // length q
  double c_x0 = 0.0;

  Eigen::Index p() const { return x0.size(); }
  Eigen::Index q() const { return y0_hat.size(); }
};

enum class SolverMode {
  Unconstrained,
  Constrained,
  OracleUnconstrained,
  OracleConstrained,
};

// A fitted shrinkage coefficient vector theta = (theta_0, ..., theta_p)
// plus solver diagnostics. `objective` is the minimized criterion value:
// the empirical risk for the feasible modes, the true loss for the oracle
// modes. `box_bound` is M for constrained modes and NaN otherwise.
struct ThetaSolution {
  Eigen::VectorXd theta;
  SolverMode mode = SolverMode::Unconstrained;
  double box_bound = 0.0;
  double empirical_risk = 0.0;
  int iterations = 0;
  double kkt_residual = 0.0;
  bool converged = true;
};

// Prediction rule selector for predict_point and the pipelines.
enum class Rule { Ols, Unconstrained, Constrained };

inline constexpr double kDefaultBound = 1e6;
inline constexpr double kDefaultTol = 1e-10;
inline constexpr int kDefaultMaxIter = 10000;

// The least squares weights (0, 1, ..., 1): intercept zero, unit scale on
// every feature, reproducing the plain least squares prediction.
Eigen::VectorXd theta_ols(Eigen::Index p);

// Assembles the per-test-point quantities from a fit. q_vec[j] for j >= 1 is
// x0_j * ((X^T X)^{-1} x0)_j * mean_k sigma2_hat_k; q_vec[0] = 0.
ShrinkagePoint build_point(const OlsFit& fit, const Eigen::VectorXd& x0);

// Unbiased estimate of the prediction risk of the rule x_tilde * theta:
//   -mean_k sigma2_0k + mean_k (y0_hat_k - x_tilde_k^T theta)^2
//   + 2 q_vec^T theta.
double empirical_risk(const ShrinkagePoint& pt, const Eigen::VectorXd& theta);

// Exact gradient of empirical_risk in theta.
Eigen::VectorXd empirical_risk_gradient(const ShrinkagePoint& pt,
                                        const Eigen::VectorXd& theta);

// Closed-form minimizer of the empirical risk: solves
//   (x_tilde^T x_tilde) theta = x_tilde^T y0_hat - q * q_vec.
// Throws IllPosed when q <= p+1 or when the smallest eigenvalue of
// x_tilde^T x_tilde / q is below 1e-12 times the largest.
ThetaSolution solve_unconstrained(const ShrinkagePoint& pt);

// Minimizes the empirical risk over the box theta_0 in [-M, M],
// theta_j in [0, M] by cyclic coordinate descent with exact per-coordinate
// minimization. Warm-started from the clipped closed-form solution when that
// is well posed, else from clipped theta_ols; a caller-supplied warm start
// overrides both. Returns the best iterate with converged = false if the
// KKT residual still exceeds tol after max_iter sweeps. Throws InvalidBound
// if M <= 0.
ThetaSolution solve_constrained(const ShrinkagePoint& pt,
                                double M = kDefaultBound,
                                double tol = kDefaultTol,
                                int max_iter = kDefaultMaxIter,
                                const Eigen::VectorXd* warm_start = nullptr);

// Prediction of the q outcomes at x0 under the chosen rule. Rule::Ols is
// x0^T B_hat (theta = theta_ols), the others refit theta at this x0.
Eigen::VectorXd predict_point(const OlsFit& fit, const Eigen::VectorXd& x0,
                              Rule rule, double M = kDefaultBound);

// (1/q) sum_k (x0^T B_k - x_tilde_k^T theta)^2. Needs the true coefficient
// matrix, so this is simulation-only.
double true_loss(const ShrinkagePoint& pt, const Eigen::MatrixXd& B,
                 const Eigen::VectorXd& theta);

// Minimizers of the true loss instead of the empirical risk; feasible only
// in simulation where B is known.
ThetaSolution oracle_unconstrained(const ShrinkagePoint& pt,
                                   const Eigen::MatrixXd& B);
ThetaSolution oracle_constrained(const ShrinkagePoint& pt,
                                 const Eigen::MatrixXd& B,
                                 double M = kDefaultBound,
                                 double tol = kDefaultTol,
                                 int max_iter = kDefaultMaxIter);

}  // namespace coolish
