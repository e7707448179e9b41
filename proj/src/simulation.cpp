#include "coolish/simulation.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <string_view>

#include "coolish/ols.hpp"
#include "coolish/parallel.hpp"

namespace coolish {

namespace {

Eigen::MatrixXd normal_matrix(int rows, int cols, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) m(i, j) = rng.normal();
  }
  return m;
}

// Minimum-norm stationary point of (1/q)||target - x_tilde theta||^2
// + 2 penalty^T theta, for test points where x_tilde^T x_tilde is singular
// within tolerance (a near-zero covariate component zeroes a column). The
// realized loss is flat along the dropped directions, so this is the limit
// of the well-posed solutions and keeps a replication's method comparison
// total.
Eigen::VectorXd min_norm_stationary(const Eigen::MatrixXd& x_tilde,
                                    const Eigen::VectorXd& target,
                                    const Eigen::VectorXd& penalty) {
  const double q = double(x_tilde.rows());
  const Eigen::MatrixXd gram = x_tilde.transpose() * x_tilde;
  const Eigen::VectorXd rhs = x_tilde.transpose() * target - q * penalty;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  const double cutoff = 1e-12 * eig.eigenvalues().maxCoeff();
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(x_tilde.cols());
  for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
    const double lambda = eig.eigenvalues()[i];
    if (lambda > cutoff) {
      const Eigen::VectorXd v = eig.eigenvectors().col(i);
      theta += v * (v.dot(rhs) / lambda);
    }
  }
  return theta;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

}  // namespace

std::string method_name(Method m) {
  switch (m) {
    case Method::Ols: return "ols";
    case Method::CoolishUnconstrained: return "coolish-unconstrained";
    case Method::CoolishConstrained: return "coolish-constrained";
    case Method::OracleUnconstrained: return "oracle-unconstrained";
    case Method::OracleConstrained: return "oracle-constrained";
  }
  return "unknown";
}

std::string structure_name(Structure s) {
  switch (s) {
    case Structure::Dense: return "dense";
    case Structure::GroupSparse: return "group";
    case Structure::EntrySparse: return "entry";
  }
  return "unknown";
}

std::string scenario_id(const ScenarioConfig& cfg) {
  return structure_name(cfg.structure) + "_p" + std::to_string(cfg.p) + "_q" +
         std::to_string(cfg.q) + "_rho" + format_double(cfg.rho);
}

void validate_config(const ScenarioConfig& cfg) {
  if (cfg.p < 1) throw InvalidConfig("p must be >= 1");
  if (cfg.n_train <= cfg.p) throw InvalidConfig("n_train must exceed p");
  if (cfg.n_test < 1) throw InvalidConfig("n_test must be >= 1");
  if (cfg.q <= cfg.p + 1) throw InvalidConfig("q must exceed p+1");
  if (!(cfg.rho >= 0.0 && cfg.rho < 1.0)) {
    throw InvalidConfig("rho must lie in [0, 1)");
  }
  if (cfg.structure == Structure::GroupSparse && cfg.p < 5) {
    throw InvalidConfig("group-sparse structure needs p >= 5");
  }
  if (cfg.n_replications < 1) throw InvalidConfig("reps must be >= 1");
  if (!(cfg.M > 0.0)) throw InvalidConfig("M must be positive");
  if (!(cfg.noise_scale >= 0.0)) {
    throw InvalidConfig("noise scale must be non-negative");
  }
}

Eigen::MatrixXd gen_coefficients(Structure structure, int p, int q, Rng& rng) {
  if (p < 1 || q < 1) throw InvalidConfig("gen_coefficients: p, q must be >= 1");
  if (structure == Structure::GroupSparse && p < 5) {
    throw InvalidConfig("gen_coefficients: group-sparse needs p >= 5");
  }

  Eigen::VectorXd base(p);
  for (int j = 0; j < p; ++j) base[j] = 2.0 * rng.normal();

  Eigen::MatrixXd B(p, q);
  for (int k = 0; k < q; ++k) {
    for (int j = 0; j < p; ++j) B(j, k) = base[j] + 0.1 * rng.normal();
  }

  switch (structure) {
    case Structure::Dense:
      break;
    case Structure::GroupSparse:
      if (p > 5) B.bottomRows(p - 5).setZero();
      break;
    case Structure::EntrySparse:
      for (int k = 0; k < q; ++k) {
        for (int j = 0; j < p; ++j) {
          if (rng.bernoulli(0.6)) B(j, k) = 0.0;
        }
      }
      break;
  }
  return B;
}

Eigen::MatrixXd sample_noise(int n, int q, double rho, Rng& rng) {
  if (!(rho >= 0.0 && rho < 1.0)) {
    throw InvalidConfig("sample_noise: rho must lie in [0, 1)");
  }
  const double shared = std::sqrt(rho);
  const double indiv = std::sqrt(1.0 - rho);
  Eigen::MatrixXd noise(n, q);
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    for (int k = 0; k < q; ++k) {
      noise(i, k) = shared * z + indiv * rng.normal();
    }
  }
  return noise;
}

std::map<Method, double> run_replication(const ScenarioConfig& cfg, Rng& rng) {
  validate_config(cfg);

  const Eigen::MatrixXd B = gen_coefficients(cfg.structure, cfg.p, cfg.q, rng);
  const Eigen::MatrixXd X = normal_matrix(cfg.n_train, cfg.p, rng);
  const Eigen::MatrixXd noise = sample_noise(cfg.n_train, cfg.q, cfg.rho, rng);
  const Eigen::MatrixXd X_test = normal_matrix(cfg.n_test, cfg.p, rng);

  Dataset data{X, X * B + cfg.noise_scale * noise};
  const OlsFit fit = fit_ols(data);

  std::map<Method, double> sums = {
      {Method::Ols, 0.0},
      {Method::CoolishUnconstrained, 0.0},
      {Method::CoolishConstrained, 0.0},
      {Method::OracleUnconstrained, 0.0},
      {Method::OracleConstrained, 0.0},
  };

  for (int t = 0; t < cfg.n_test; ++t) {
    const Eigen::VectorXd x0 = X_test.row(t).transpose();
    const ShrinkagePoint pt = build_point(fit, x0);
    sums[Method::Ols] += true_loss(pt, B, theta_ols(cfg.p));
    Eigen::VectorXd theta_unc, theta_oracle_unc;
    try {
      theta_unc = solve_unconstrained(pt).theta;
      theta_oracle_unc = oracle_unconstrained(pt, B).theta;
    } catch (const IllPosed&) {
      theta_unc = min_norm_stationary(pt.x_tilde, pt.y0_hat, pt.q_vec);
      theta_oracle_unc =
          min_norm_stationary(pt.x_tilde, B.transpose() * pt.x0,
                              Eigen::VectorXd::Zero(cfg.p + 1));
    }
    sums[Method::CoolishUnconstrained] += true_loss(pt, B, theta_unc);
    sums[Method::OracleUnconstrained] += true_loss(pt, B, theta_oracle_unc);
    sums[Method::CoolishConstrained] +=
        true_loss(pt, B, solve_constrained(pt, cfg.M).theta);
    sums[Method::OracleConstrained] +=
        true_loss(pt, B, oracle_constrained(pt, B, cfg.M).theta);
  }

  for (auto& [method, sum] : sums) sum /= double(cfg.n_test);
  return sums;
}

ScenarioReport run_scenario(const ScenarioConfig& cfg, int n_threads) {
  validate_config(cfg);

  std::vector<std::map<Method, double>> results(cfg.n_replications);
  parallel_for(cfg.n_replications, n_threads, [&](int rep) {
    Rng rng = Rng::substream(cfg.seed, static_cast<std::uint64_t>(rep));
    results[rep] = run_replication(cfg, rng);
  });

  ScenarioReport report;
  report.config = cfg;
  for (const auto& [method, loss] : results[0]) {
    auto& losses = report.per_method_losses[method];
    losses.resize(cfg.n_replications);
    for (int rep = 0; rep < cfg.n_replications; ++rep) {
      losses[rep] = results[rep].at(method);
    }
    report.per_method_mean_loss[method] =
        std::accumulate(losses.begin(), losses.end(), 0.0) /
        double(cfg.n_replications);
  }
  return report;
}

void write_scenario_csv(std::ostream& out, const ScenarioReport& report) {
  out << "scenario,method,replication,loss\n";
  const std::string id = scenario_id(report.config);
  char buf[64];
  for (const auto& [method, losses] : report.per_method_losses) {
    for (std::size_t rep = 0; rep < losses.size(); ++rep) {
      const auto res = std::to_chars(buf, buf + sizeof(buf), losses[rep]);
      out << id << ',' << method_name(method) << ',' << rep << ','
          << std::string_view(buf, res.ptr - buf) << '\n';
    }
  }
}

}  // namespace coolish
