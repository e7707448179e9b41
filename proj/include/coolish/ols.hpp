#pragma once

#include <Eigen/Dense>

#include "coolish/errors.hpp"

namespace coolish {

// Training data for a multi-outcome regression: n rows, p predictors,
// q outcomes. Requires n > p and a full-column-rank design.
struct Dataset {
  Eigen::MatrixXd X;  // n x p
  Eigen::MatrixXd Y;  // n x q
};

// Least squares fit of all q outcomes on a shared design, with the
// per-outcome residual variances and the inverse Gram matrix kept around
// for predictive-variance bookkeeping.
struct OlsFit {
  Eigen::MatrixXd B_hat;       // p x q coefficients
  Eigen::MatrixXd gram_inv;    // (X^T X)^{-1}, p x p
  Eigen::VectorXd sigma2_hat;  // residual variance per outcome, length q
  Eigen::Index n = 0;
  Eigen::Index p = 0;
  Eigen::Index q = 0;
};

// Moments of the least squares prediction at a new covariate vector x0.
struct PredictiveMoments {
  Eigen::VectorXd y0_hat;    // x0^T B_hat per outcome, length q
  Eigen::VectorXd sigma2_0;  // estimated variance of x0^T B_hat_k, length q
  double c_x0 = 0.0;         // x0^T (X^T X)^{-1} x0
  Eigen::VectorXd w;         // (X^T X)^{-1} x0, length p
};

// Solves the normal equations by Cholesky factorization of X^T X.
// sigma2_hat[k] = ||Y_k - X B_hat_k||^2 / (n - p).
//
// Throws ShapeMismatch if X and Y row counts differ, DegenerateSample if
// n <= p, and RankDeficient if the smallest eigenvalue of X^T X / n falls
// below 1e-10.
OlsFit fit_ols(const Dataset& data);

// Prediction mean and variance bookkeeping at x0. Throws ShapeMismatch if
// x0 does not have length p.
PredictiveMoments predictive_moments(const OlsFit& fit,
                                     const Eigen::VectorXd& x0);

}  // namespace coolish
