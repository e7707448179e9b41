#include "coolish/ols.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <string>

namespace coolish {

namespace {
constexpr double kRankTol = 1e-10;  // on eigenvalues of X^T X / n
}

OlsFit fit_ols(const Dataset& data) {
  const Eigen::Index n = data.X.rows();
  const Eigen::Index p = data.X.cols();
  const Eigen::Index q = data.Y.cols();

  if (data.Y.rows() != n) {
    throw ShapeMismatch("fit_ols: X has " + std::to_string(n) +
                        " rows but Y has " + std::to_string(data.Y.rows()));
  }
  if (p < 1) throw ShapeMismatch("fit_ols: X must have at least one column");
  if (n <= p) {
    throw DegenerateSample("fit_ols: need n > p, got n=" + std::to_string(n) +
                           ", p=" + std::to_string(p));
  }

  const Eigen::MatrixXd gram = data.X.transpose() * data.X;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram / double(n),
                                                     Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < kRankTol) {
    throw RankDeficient("fit_ols: X^T X / n has smallest eigenvalue " +
                        std::to_string(eig.eigenvalues().minCoeff()) +
                        " < 1e-10");
  }

  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) {
    throw RankDeficient("fit_ols: Cholesky factorization of X^T X failed");
  }

  OlsFit fit;
  fit.n = n;
  fit.p = p;
  fit.q = q;
  fit.B_hat = llt.solve(data.X.transpose() * data.Y);
  fit.gram_inv = llt.solve(Eigen::MatrixXd::Identity(p, p));
  // Residual variances without forming the n x n hat matrix.
  const Eigen::MatrixXd resid = data.Y - data.X * fit.B_hat;
  fit.sigma2_hat =
      resid.colwise().squaredNorm().transpose() / double(n - p);
  return fit;
}

PredictiveMoments predictive_moments(const OlsFit& fit,
                                     const Eigen::VectorXd& x0) {
  if (x0.size() != fit.p) {
    throw ShapeMismatch("predictive_moments: x0 has length " +
                        std::to_string(x0.size()) + ", expected p=" +
                        std::to_string(fit.p));
  }
  PredictiveMoments m;
  m.y0_hat = fit.B_hat.transpose() * x0;
  m.w = fit.gram_inv * x0;
  m.c_x0 = x0.dot(m.w);
  m.sigma2_0 = fit.sigma2_hat * m.c_x0;
  return m;
}

}  // namespace coolish
