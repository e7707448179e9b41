#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "coolish/rng.hpp"
#include "coolish/shrinkage.hpp"

namespace coolish {

enum class Structure { Dense, GroupSparse, EntrySparse };

enum class Method {
  Ols,
  CoolishUnconstrained,
  CoolishConstrained,
  OracleUnconstrained,
  OracleConstrained,
};

std::string method_name(Method m);
std::string structure_name(Structure s);

// One cell of the simulation grid. noise_scale multiplies the sampled noise
// matrix; 1 is the data-generating model, 0 gives the noiseless variant.
struct ScenarioConfig {
  int n_train = 100;
  int n_test = 50;
  int p = 10;
  int q = 1000;
  double rho = 0.0;
  Structure structure = Structure::Dense;
  int n_replications = 100;
  double M = kDefaultBound;
  std::uint64_t seed = 0;
  double noise_scale = 1.0;
};

struct ScenarioReport {
  ScenarioConfig config;
  std::map<Method, std::vector<double>> per_method_losses;
  std::map<Method, double> per_method_mean_loss;
};

// Short label such as "dense_p10_q1000_rho0.3", used as the scenario id in
// report CSVs.
std::string scenario_id(const ScenarioConfig& cfg);

// Throws InvalidConfig naming the offending field.
void validate_config(const ScenarioConfig& cfg);

// Coefficient matrix under the chosen sparsity structure. Dense: column k is
// b + tau_k with b ~ N(0, 4I) drawn once and tau_k ~ N(0, 0.01 I).
// GroupSparse zeroes all but the first 5 rows of a dense draw (needs p >= 5);
// EntrySparse zeroes each entry of a dense draw independently with
// probability 0.6.
Eigen::MatrixXd gen_coefficients(Structure structure, int p, int q, Rng& rng);

// n rows iid N(0, Sigma) with Sigma compound symmetric: unit diagonal,
// off-diagonal rho. Sampled exactly as sqrt(rho) z_i 1 + sqrt(1-rho) w_i.
Eigen::MatrixXd sample_noise(int n, int q, double rho, Rng& rng);

// One replication: draws coefficients, training data, and fresh test
// covariates, fits least squares, and returns the test-averaged true loss of
// every method.
std::map<Method, double> run_replication(const ScenarioConfig& cfg, Rng& rng);

// Runs cfg.n_replications independent replications, each on its own RNG
// substream keyed by (seed, replication), so results are identical across
// runs and thread counts.
ScenarioReport run_scenario(const ScenarioConfig& cfg, int n_threads = 1);

// One row per method and replication: scenario,method,replication,loss.
void write_scenario_csv(std::ostream& out, const ScenarioReport& report);

}  // namespace coolish
