// Acceptance suite: exercises the library end to end against independent
// oracles, Monte Carlo checks, and trend requirements on synthetic data.
// Prints one PASS/FAIL line per criterion; exit code 0 iff all pass.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "coolish/csv.hpp"
#include "coolish/genomics.hpp"
#include "coolish/parallel.hpp"
#include "coolish/simulation.hpp"
#include "test_support.hpp"

using namespace coolish;
namespace fs = std::filesystem;

namespace {

std::string g_cli_path;
int g_failures = 0;

void report(int index, const char* name, bool pass, double seconds,
            const std::string& detail) {
  std::printf("[%s] %2d %-52s (%6.1fs) %s\n", pass ? "PASS" : "FAIL", index,
              name, seconds, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

template <typename Fn>
void run(int index, const char* name, Fn&& fn) {
  const auto start = std::chrono::steady_clock::now();
  std::string detail;
  bool pass = false;
  try {
    pass = fn(detail);
  } catch (const std::exception& e) {
    detail = std::string("threw: ") + e.what();
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  report(index, name, pass, secs, detail);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---------------------------------------------------------------------------
// 1. The risk estimate is unbiased for the realized loss: over noise
//    redraws with everything else fixed, mean(estimate - loss) is zero
//    within 3 standard errors, for several fixed coefficient vectors.
bool criterion_unbiased(std::string& detail) {
  const int n = 50, p = 3, q = 200, draws = 5000;
  Rng setup(20260801);
  const Eigen::MatrixXd X = testsup::normal_matrix(n, p, setup);
  const Eigen::MatrixXd B = testsup::dense_coefficients(p, q, setup);
  const Eigen::VectorXd x0 = testsup::normal_matrix(p, 1, setup).col(0);

  std::vector<Eigen::VectorXd> thetas;
  thetas.push_back(Eigen::VectorXd::Zero(p + 1));
  thetas.push_back(theta_ols(p));
  Eigen::VectorXd t(p + 1);
  t << 0.5, 0.8, 1.2, 0.3;
  thetas.push_back(t);
  t << -1.0, 0.5, 0.0, 2.0;
  thetas.push_back(t);
  t << 0.1, 1.5, 0.7, 0.9;
  thetas.push_back(t);

  bool ok = true;
  double worst_sigmas = 0.0;
  for (const double rho : {0.0, 0.5}) {
    Rng rng(37 + static_cast<std::uint64_t>(rho * 10));
    std::vector<double> sum(thetas.size(), 0.0), sumsq(thetas.size(), 0.0);
    for (int d = 0; d < draws; ++d) {
      const Eigen::MatrixXd Y =
          X * B + testsup::compound_noise(n, q, rho, rng);
      const ShrinkagePoint pt = build_point(fit_ols({X, Y}), x0);
      for (std::size_t i = 0; i < thetas.size(); ++i) {
        const double diff = empirical_risk(pt, thetas[i]) -
                            testsup::direct_true_loss(pt, B, thetas[i]);
        sum[i] += diff;
        sumsq[i] += diff * diff;
      }
    }
    for (std::size_t i = 0; i < thetas.size(); ++i) {
      const double mean = sum[i] / draws;
      const double var = (sumsq[i] - sum[i] * sum[i] / draws) / (draws - 1);
      const double se = std::sqrt(var / draws);
      const double sigmas = std::abs(mean) / se;
      worst_sigmas = std::max(worst_sigmas, sigmas);
      ok = ok && (std::abs(mean) <= 3.0 * se);
    }
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "max |bias|/se = %.2f (limit 3)",
                worst_sigmas);
  detail = buf;
  return ok;
}

// ---------------------------------------------------------------------------
// 2/3/4 share their random instances.
struct SolverChecks {
  bool closed_form_ok = true;
  bool box_ok = true;
  bool dominance_ok = true;
  double worst_theta_gap_unc = 0.0;
  double worst_grad = 0.0;
  double worst_theta_gap_box = 0.0;
  double worst_obj_gap_box = 0.0;
};

SolverChecks g_solver;

bool criterion_closed_form(std::string& detail) {
  Rng rng(424242);
  for (int trial = 0; trial < 100; ++trial) {
    const int p = 1 + static_cast<int>(rng.uniform_int(8));
    const int q = p + 2 + static_cast<int>(rng.uniform_int(499 - p - 2));
    const int n = p + 20 + static_cast<int>(rng.uniform_int(60));
    const double rho = 0.9 * rng.uniform();
    const auto inst = testsup::make_solver_instance(n, p, q, rho, rng);

    const ThetaSolution sol = solve_unconstrained(inst.pt);
    const Eigen::VectorXd lo = Eigen::VectorXd::Constant(p + 1, -1e9);
    const Eigen::VectorXd hi = Eigen::VectorXd::Constant(p + 1, 1e9);
    const Eigen::VectorXd oracle = testsup::projected_gradient_minimize(
        inst.pt.x_tilde, inst.pt.y0_hat, inst.pt.q_vec, lo, hi, 100000);

    const double gap = (sol.theta - oracle).lpNorm<Eigen::Infinity>();
    const double grad = empirical_risk_gradient(inst.pt, sol.theta)
                            .lpNorm<Eigen::Infinity>();
    g_solver.worst_theta_gap_unc = std::max(g_solver.worst_theta_gap_unc, gap);
    g_solver.worst_grad = std::max(g_solver.worst_grad, grad);
    if (gap > 1e-6 || grad > 1e-8) g_solver.closed_form_ok = false;

    // Dominance instances for criterion 4, box at the default large bound.
    const ThetaSolution con = solve_constrained(inst.pt, kDefaultBound);
    if (con.empirical_risk >
        empirical_risk(inst.pt, theta_ols(p)) + 1e-10) {
      g_solver.dominance_ok = false;
    }
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "max dtheta %.1e, max grad %.1e",
                g_solver.worst_theta_gap_unc, g_solver.worst_grad);
  detail = buf;
  return g_solver.closed_form_ok;
}

bool criterion_box_solver(std::string& detail) {
  Rng rng(515151);
  for (int trial = 0; trial < 100; ++trial) {
    const int p = 1 + static_cast<int>(rng.uniform_int(3));
    const int q = p + 3 + static_cast<int>(rng.uniform_int(120));
    const int n = p + 12 + static_cast<int>(rng.uniform_int(30));
    const double rho = 0.9 * rng.uniform();
    const auto inst = testsup::make_solver_instance(n, p, q, rho, rng);

    const double M = 2.0;
    const ThetaSolution sol = solve_constrained(inst.pt, M);
    const auto oracle = testsup::enumerate_box_min(
        inst.pt.x_tilde, inst.pt.y0_hat, inst.pt.q_vec, M);
    if (!oracle.found) {
      g_solver.box_ok = false;
      continue;
    }
    const double theta_gap =
        (sol.theta - oracle.theta).lpNorm<Eigen::Infinity>();
    // Enumeration objective lacks the constant variance offset.
    const double obj_gap = std::abs(
        sol.empirical_risk - (oracle.objective - inst.pt.sigma2_0.mean()));
    g_solver.worst_theta_gap_box =
        std::max(g_solver.worst_theta_gap_box, theta_gap);
    g_solver.worst_obj_gap_box =
        std::max(g_solver.worst_obj_gap_box, obj_gap);
    if (theta_gap > 1e-6 || obj_gap > 1e-10) g_solver.box_ok = false;

    if (sol.empirical_risk >
        empirical_risk(inst.pt, theta_ols(p)) + 1e-10) {
      g_solver.dominance_ok = false;
    }
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "max dtheta %.1e, max dobj %.1e",
                g_solver.worst_theta_gap_box, g_solver.worst_obj_gap_box);
  detail = buf;
  return g_solver.box_ok;
}

bool criterion_dominance(std::string& detail) {
  detail = "box risk <= least-squares-weights risk + 1e-10 on all 200 "
           "solver instances";
  return g_solver.dominance_ok;
}

// ---------------------------------------------------------------------------
// 5. As the outcome count grows, the feasible estimator approaches the
//    oracle, both in the coefficients and in realized loss.
bool criterion_oracle_convergence(std::string& detail) {
  const std::vector<int> qs = {250, 1000, 4000};
  const int reps = 50, n = 100, p = 5;
  const double rho = 0.3;

  std::vector<double> med_theta(qs.size()), med_loss(qs.size());
  for (std::size_t qi = 0; qi < qs.size(); ++qi) {
    std::vector<double> theta_gap(reps), loss_gap(reps);
    parallel_for(reps, resolve_threads(0), [&](int rep) {
      Rng rng = Rng::substream(1400000 + static_cast<std::uint64_t>(qs[qi]),
                               static_cast<std::uint64_t>(rep));
      const auto inst = testsup::make_instance(n, p, qs[qi], rho, rng);
      Eigen::VectorXd feasible, oracle;
      try {
        feasible = solve_unconstrained(inst.pt).theta;
        oracle = oracle_unconstrained(inst.pt, inst.B).theta;
      } catch (const IllPosed&) {
        feasible = oracle = theta_ols(p);  // degenerate x0, gaps are zero
      }
      theta_gap[rep] = (feasible - oracle).norm();
      loss_gap[rep] = true_loss(inst.pt, inst.B, feasible) -
                      true_loss(inst.pt, inst.B, oracle);
    });
    med_theta[qi] = median(theta_gap);
    med_loss[qi] = median(loss_gap);
  }

  bool ok = true;
  for (std::size_t i = 1; i < qs.size(); ++i) {
    ok = ok && (med_theta[i] < med_theta[i - 1]);
    ok = ok && (med_loss[i] < med_loss[i - 1]);
  }
  char buf[128];
  std::snprintf(buf, sizeof(buf),
                "median dtheta %.3g/%.3g/%.3g, dloss %.3g/%.3g/%.3g",
                med_theta[0], med_theta[1], med_theta[2], med_loss[0],
                med_loss[1], med_loss[2]);
  detail = buf;
  return ok;
}

// ---------------------------------------------------------------------------
// 6. Dense coefficients, n=100, p=10, q=1000: the constrained rule clearly
//    beats least squares at rho 0.3, its loss does not improve as the
//    outcome correlation rises, and it is no worse than the unconstrained
//    rule at rho 0.9.
bool criterion_correlation_trend(std::string& detail) {
  const std::vector<double> rhos = {0.0, 0.3, 0.6, 0.9};
  std::vector<double> con(rhos.size()), ols(rhos.size()), unc(rhos.size());
  for (std::size_t i = 0; i < rhos.size(); ++i) {
    ScenarioConfig cfg;
    cfg.n_train = 100;
    cfg.n_test = 50;
    cfg.p = 10;
    cfg.q = 1000;
    cfg.rho = rhos[i];
    cfg.structure = Structure::Dense;
    cfg.n_replications = 100;
    cfg.seed = 7000 + i;
    const ScenarioReport rep = run_scenario(cfg, resolve_threads(0));
    con[i] = rep.per_method_mean_loss.at(Method::CoolishConstrained);
    ols[i] = rep.per_method_mean_loss.at(Method::Ols);
    unc[i] = rep.per_method_mean_loss.at(Method::CoolishUnconstrained);
  }

  const bool beats_ols = con[1] < 0.95 * ols[1];
  bool monotone = true;
  for (std::size_t i = 1; i < rhos.size(); ++i) {
    monotone = monotone && (con[i] >= con[i - 1]);
  }
  const bool con_le_unc = con[3] <= unc[3];

  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "con/ols@0.3 = %.3f, con by rho: %.3g %.3g %.3g %.3g, "
                "con<=unc@0.9: %s",
                con[1] / ols[1], con[0], con[1], con[2], con[3],
                con_le_unc ? "yes" : "no");
  detail = buf;
  return beats_ols && monotone && con_le_unc;
}

// ---------------------------------------------------------------------------
// 7. The unconstrained rule's handicap relative to the constrained rule
//    shrinks monotonically as the outcome count grows.
bool criterion_gap_shrinks(std::string& detail) {
  const std::vector<int> qs = {250, 500, 1000, 2000};
  std::vector<double> gap(qs.size());
  for (std::size_t i = 0; i < qs.size(); ++i) {
    ScenarioConfig cfg;
    cfg.n_train = 100;
    cfg.n_test = 50;
    cfg.p = 10;
    cfg.q = qs[i];
    cfg.rho = 0.3;
    cfg.structure = Structure::Dense;
    cfg.n_replications = 100;
    cfg.seed = 8000 + i;
    const ScenarioReport rep = run_scenario(cfg, resolve_threads(0));
    gap[i] = rep.per_method_mean_loss.at(Method::CoolishUnconstrained) -
             rep.per_method_mean_loss.at(Method::CoolishConstrained);
  }
  bool ok = true;
  for (std::size_t i = 1; i < qs.size(); ++i) ok = ok && (gap[i] <= gap[i - 1]);
  char buf[128];
  std::snprintf(buf, sizeof(buf), "gap by q: %.4g %.4g %.4g %.4g", gap[0],
                gap[1], gap[2], gap[3]);
  detail = buf;
  return ok;
}

// ---------------------------------------------------------------------------
// 8. Compound-symmetry sampler moments at n = 10,000.
bool criterion_sampler(std::string& detail) {
  const int n = 10000, q = 5;
  bool ok = true;
  double worst_var = 1.0, worst_corr_err = 0.0;
  for (const double rho : {0.0, 0.3, 0.9}) {
    Rng rng(909090 + static_cast<std::uint64_t>(rho * 100));
    const Eigen::MatrixXd e = sample_noise(n, q, rho, rng);
    Eigen::VectorXd sd(q);
    Eigen::MatrixXd centered(n, q);
    for (int k = 0; k < q; ++k) {
      centered.col(k) = e.col(k).array() - e.col(k).mean();
      const double var = centered.col(k).squaredNorm() / (n - 1);
      if (std::abs(var - 1.0) > std::abs(worst_var - 1.0)) worst_var = var;
      ok = ok && (var > 0.95 && var < 1.05);
      sd[k] = std::sqrt(var);
    }
    for (int a = 0; a < q; ++a) {
      for (int b = a + 1; b < q; ++b) {
        const double corr = centered.col(a).dot(centered.col(b)) /
                            ((n - 1) * sd[a] * sd[b]);
        worst_corr_err = std::max(worst_corr_err, std::abs(corr - rho));
        ok = ok && (std::abs(corr - rho) <= 0.03);
      }
    }
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "worst var %.4f, worst |corr err| %.4f",
                worst_var, worst_corr_err);
  detail = buf;
  return ok;
}

// ---------------------------------------------------------------------------
// 9. Expression pipeline exactness plus panel sizes across the full list
//    of panel dimensions on a 400-gene fixture.
bool criterion_pipeline(std::string& detail) {
  bool ok = true;

  ExpressionMatrix tiny;
  tiny.values = Eigen::MatrixXd::Zero(1, 1);
  tiny.gene_ids = {"g"};
  tiny.stage = Stage::CPM;
  const double at_zero = log_transform(tiny).values(0, 0);
  ok = ok && std::abs(at_zero - std::log10(1.01)) <= 1e-12;

  const ExpressionMatrix counts = synthetic_counts(500, 400, 314159);
  const ExpressionMatrix cpm = cpm_normalize(counts);
  for (Eigen::Index i = 0; i < cpm.cells(); ++i) {
    ok = ok && std::abs(cpm.values.row(i).sum() - 1e6) <= 1e-6 * 1e6;
  }

  const ExpressionMatrix logged = log_transform(cpm);
  const std::vector<int> ks = {14, 18, 30, 35, 51, 65, 91,
                               105, 140, 157, 198, 228, 285};
  std::vector<bool> k_ok(ks.size(), false);
  parallel_for(static_cast<int>(ks.size()), resolve_threads(0), [&](int i) {
    Rng rng = Rng::substream(271828, static_cast<std::uint64_t>(ks[i]));
    const PanelSelection sel = select_panel_kmeans(logged, ks[i], rng);
    std::vector<int> sorted = sel.panel_indices;
    std::sort(sorted.begin(), sorted.end());
    const bool distinct =
        std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end();
    k_ok[i] = distinct &&
              static_cast<int>(sel.panel_indices.size()) == ks[i] &&
              sorted.front() >= 0 && sorted.back() < 400;
  });
  for (const bool v : k_ok) ok = ok && v;

  detail = "log10(1.01) exact, CPM sums exact, 13 panel sizes exact";
  return ok;
}

// ---------------------------------------------------------------------------
// 10. CLI determinism: byte-identical outputs across reruns and thread
//     counts for the simulate and panel subcommands.
bool criterion_cli_determinism(std::string& detail) {
  if (g_cli_path.empty()) {
    detail = "CLI path not supplied";
    return false;
  }
  const fs::path dir = fs::temp_directory_path() / "coolish_acceptance";
  fs::create_directories(dir);

  const auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string{std::istreambuf_iterator<char>(in),
                       std::istreambuf_iterator<char>()};
  };
  const auto shell = [&](const std::string& args) {
    const std::string cmd = g_cli_path + " " + args + " 2>/dev/null";
    return WEXITSTATUS(std::system(cmd.c_str()));
  };

  bool ok = true;

  // simulate: two runs at one thread, one at four.
  const std::string sim_base =
      "simulate --p 5 --q 300 --rho 0.3 --structure dense --reps 30 "
      "--n-train 60 --n-test 10 --seed 2024 ";
  const fs::path s1 = dir / "sim1.csv", s2 = dir / "sim2.csv",
                 s3 = dir / "sim3.csv";
  ok = ok && shell(sim_base + "--threads 1 --out " + s1.string()) == 0;
  ok = ok && shell(sim_base + "--threads 1 --out " + s2.string()) == 0;
  ok = ok && shell(sim_base + "--threads 4 --out " + s3.string()) == 0;
  const bool sim_same =
      ok && slurp(s1) == slurp(s2) && slurp(s1) == slurp(s3);

  // panel: same pattern on a synthetic expression pair.
  const fs::path train_csv = dir / "train.csv", test_csv = dir / "test.csv";
  write_expression_csv(train_csv.string(), synthetic_counts(300, 200, 11));
  write_expression_csv(test_csv.string(), synthetic_counts(250, 200, 22));
  const std::string panel_base = "panel --train " + train_csv.string() +
                                 " --test " + test_csv.string() +
                                 " --k 14 --k 51 --min-cells 5 --seed 5 ";
  const fs::path p1 = dir / "panel1.csv", p2 = dir / "panel2.csv",
                 p3 = dir / "panel3.csv";
  ok = ok && shell(panel_base + "--threads 1 --out " + p1.string()) == 0;
  ok = ok && shell(panel_base + "--threads 1 --out " + p2.string()) == 0;
  ok = ok && shell(panel_base + "--threads 4 --out " + p3.string()) == 0;
  const bool panel_same =
      ok && slurp(p1) == slurp(p2) && slurp(p1) == slurp(p3);

  detail = std::string("simulate ") + (sim_same ? "identical" : "DIFFERS") +
           ", panel " + (panel_same ? "identical" : "DIFFERS");
  return ok && sim_same && panel_same;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) g_cli_path = argv[1];

  run(1, "risk estimate unbiased over noise redraws", criterion_unbiased);
  run(2, "closed-form solve matches projected gradient",
      criterion_closed_form);
  run(3, "box solve matches active-set enumeration", criterion_box_solver);
  run(4, "constrained risk dominates least squares weights",
      criterion_dominance);
  run(5, "feasible estimator approaches the oracle in q",
      criterion_oracle_convergence);
  run(6, "correlation trend and win over least squares",
      criterion_correlation_trend);
  run(7, "unconstrained-constrained gap shrinks in q", criterion_gap_shrinks);
  run(8, "compound-symmetry sampler moments", criterion_sampler);
  run(9, "expression pipeline exactness and panel sizes", criterion_pipeline);
  run(10, "CLI determinism across runs and thread counts",
      criterion_cli_determinism);

  if (g_failures == 0) {
    std::printf("all acceptance criteria passed\n");
    return 0;
  }
  std::printf("%d acceptance criteria FAILED\n", g_failures);
  return 1;
}
