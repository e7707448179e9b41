#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "coolish/csv.hpp"
#include "coolish/genomics.hpp"
#include "coolish/manifest.hpp"
#include "coolish/parallel.hpp"
#include "coolish/simulation.hpp"

namespace {

using namespace coolish;

// Shortest decimal form that parses back to the same double.
std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

struct SimulateArgs {
  ScenarioConfig cfg;
  std::string structure = "dense";
  std::string out = "simulation.csv";
  int threads = 0;
};

int run_simulate(const SimulateArgs& args) {
  ScenarioConfig cfg = args.cfg;
  if (args.structure == "dense") cfg.structure = Structure::Dense;
  else if (args.structure == "group") cfg.structure = Structure::GroupSparse;
  else cfg.structure = Structure::EntrySparse;

  try {
    validate_config(cfg);
  } catch (const InvalidConfig& e) {
    std::cerr << "invalid flag combination: " << e.what() << '\n';
    return 2;
  }

  auto manifest = begin_manifest(
      "simulate",
      {{"p", std::to_string(cfg.p)},
       {"q", std::to_string(cfg.q)},
       {"rho", fmt(cfg.rho)},
       {"structure", args.structure},
       {"reps", std::to_string(cfg.n_replications)},
       {"n-train", std::to_string(cfg.n_train)},
       {"n-test", std::to_string(cfg.n_test)},
       {"M", fmt(cfg.M)},
       {"noise-scale", fmt(cfg.noise_scale)},
       {"out", args.out}},
      cfg.seed);

  const ScenarioReport report =
      run_scenario(cfg, resolve_threads(args.threads));

  std::ofstream out(args.out);
  if (!out) throw ParseError("cannot write " + args.out);
  write_scenario_csv(out, report);
  out.close();
  finish_manifest(manifest, args.out);
  return 0;
}

struct FitPredictArgs {
  std::string train_x, train_y, test_x;
  std::string rule = "constrained";
  double M = kDefaultBound;
  std::string out = "predictions.csv";
  int threads = 0;
};

int run_fit_predict(const FitPredictArgs& args) {
  auto manifest = begin_manifest("fit-predict",
                                 {{"train-x", args.train_x},
                                  {"train-y", args.train_y},
                                  {"test-x", args.test_x},
                                  {"rule", args.rule},
                                  {"M", fmt(args.M)},
                                  {"out", args.out}},
                                 0);

  Eigen::MatrixXd X, Y, X_test;
  try {
    X = read_matrix_csv(args.train_x);
  } catch (const std::exception& e) {
    throw ParseError(std::string("train-x: ") + e.what());
  }
  try {
    Y = read_matrix_csv(args.train_y);
  } catch (const std::exception& e) {
    throw ParseError(std::string("train-y: ") + e.what());
  }
  try {
    X_test = read_matrix_csv(args.test_x);
  } catch (const std::exception& e) {
    throw ParseError(std::string("test-x: ") + e.what());
  }
  if (X_test.cols() != X.cols()) {
    throw ShapeMismatch("test-x has " + std::to_string(X_test.cols()) +
                        " columns but train-x has " +
                        std::to_string(X.cols()));
  }

  OlsFit fit;
  try {
    fit = fit_ols({X, Y});
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("train-x/train-y: ") + e.what());
  }
  const Rule rule = args.rule == "ols" ? Rule::Ols
                    : args.rule == "unconstrained" ? Rule::Unconstrained
                                                   : Rule::Constrained;

  Eigen::MatrixXd pred(X_test.rows(), Y.cols());
  parallel_for(static_cast<int>(X_test.rows()), resolve_threads(args.threads),
               [&](int i) {
                 pred.row(i) =
                     predict_point(fit, X_test.row(i).transpose(), rule,
                                   args.M)
                         .transpose();
               });

  write_matrix_csv(args.out, pred);
  finish_manifest(manifest, args.out);
  return 0;
}

struct PipelineArgs {
  std::string train, test;
  std::vector<int> ks;
  int min_cells = 300;
  std::uint64_t seed = 0;
  std::string out;
  bool swap = false;
  double M = kDefaultBound;
  bool no_intercept = false;
  std::vector<std::string> rules;
  int threads = 0;
};

// Shared front half of panel/impute: read, filter, normalize, transform.
struct PreparedPair {
  ExpressionMatrix train;  // LogTransformed, filtered gene set
  ExpressionMatrix test;
};

PreparedPair prepare_pair(const PipelineArgs& args) {
  ExpressionMatrix a = read_expression_csv(args.train);
  ExpressionMatrix b = read_expression_csv(args.test);
  if (args.swap) std::swap(a, b);

  const auto kept = filter_genes(a, b, args.min_cells);
  if (kept.empty()) {
    throw InvalidConfig("no gene passes the min-cells filter (" +
                        std::to_string(args.min_cells) + ") in both datasets");
  }
  PreparedPair pair;
  pair.train = log_transform(cpm_normalize(subset_genes(a, kept)));
  pair.test = log_transform(cpm_normalize(subset_genes(b, kept)));
  return pair;
}

// Ks are keyed into the RNG by value, so the panel for a given K does not
// depend on which other Ks were requested.
PanelSelection panel_for_k(const ExpressionMatrix& train, int k,
                           std::uint64_t seed) {
  Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(k));
  return select_panel_kmeans(train, k, rng);
}

// Imputation needs at least one non-panel gene left over, so its upper limit
// is one stricter than plain panel selection.
int check_ks(const std::vector<int>& ks, Eigen::Index genes,
             bool need_outcomes) {
  const Eigen::Index limit = need_outcomes ? genes - 1 : genes;
  for (const int k : ks) {
    if (k < 1 || k > limit) {
      std::cerr << "--k: " << k << " exceeds gene count (have " << genes
                << " genes after filtering; need 1 <= K <= " << limit
                << ")\n";
      return 2;
    }
  }
  return 0;
}

std::string join_ints(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    s += (i ? "," : "") + std::to_string(v[i]);
  }
  return s;
}

int run_panel(const PipelineArgs& args) {
  auto manifest = begin_manifest("panel",
                                 {{"train", args.train},
                                  {"test", args.test},
                                  {"k", join_ints(args.ks)},
                                  {"min-cells", std::to_string(args.min_cells)},
                                  {"swap", args.swap ? "true" : "false"},
                                  {"out", args.out}},
                                 args.seed);

  const PreparedPair pair = prepare_pair(args);
  if (const int rc = check_ks(args.ks, pair.train.genes(), false)) return rc;

  std::vector<PanelSelection> panels(args.ks.size());
  parallel_for(static_cast<int>(args.ks.size()), resolve_threads(args.threads),
               [&](int i) {
                 panels[i] = panel_for_k(pair.train, args.ks[i], args.seed);
               });

  std::ofstream out(args.out);
  if (!out) throw ParseError("cannot write " + args.out);
  out << "k,cluster,gene_index,gene_id\n";
  for (std::size_t i = 0; i < args.ks.size(); ++i) {
    const auto& sel = panels[i];
    for (int c = 0; c < sel.K; ++c) {
      const int g = sel.panel_indices[c];
      out << args.ks[i] << ',' << c << ',' << g << ','
          << pair.train.gene_ids[g] << '\n';
    }
  }
  out.close();
  finish_manifest(manifest, args.out);
  return 0;
}

int run_impute(const PipelineArgs& args) {
  std::string rule_list;
  for (std::size_t i = 0; i < args.rules.size(); ++i) {
    rule_list += (i ? "," : "") + args.rules[i];
  }
  auto manifest = begin_manifest("impute",
                                 {{"train", args.train},
                                  {"test", args.test},
                                  {"k", join_ints(args.ks)},
                                  {"min-cells", std::to_string(args.min_cells)},
                                  {"swap", args.swap ? "true" : "false"},
                                  {"M", fmt(args.M)},
                                  {"intercept", args.no_intercept ? "false" : "true"},
                                  {"rules", rule_list},
                                  {"out", args.out}},
                                 args.seed);

  const PreparedPair pair = prepare_pair(args);
  if (const int rc = check_ks(args.ks, pair.train.genes(), true)) return rc;

  std::vector<Rule> rules;
  for (const auto& name : args.rules) {
    if (name == "ols") rules.push_back(Rule::Ols);
    else if (name == "unconstrained") rules.push_back(Rule::Unconstrained);
    else rules.push_back(Rule::Constrained);
  }

  ImputationOptions opts;
  opts.M = args.M;
  opts.intercept = !args.no_intercept;
  opts.n_threads = resolve_threads(args.threads);

  std::ofstream out(args.out);
  if (!out) throw ParseError("cannot write " + args.out);
  out << "rule,k,mse,seconds\n";
  for (const int k : args.ks) {
    const PanelSelection panel = panel_for_k(pair.train, k, args.seed);
    const auto results =
        evaluate_imputation(pair.train, pair.test, panel, rules, opts);
    for (const auto& r : results) {
      if (!r.ok) {
        std::cerr << "warning: rule " << rule_name(r.rule) << " at k=" << k
                  << " failed: " << r.message << '\n';
      }
      out << rule_name(r.rule) << ',' << k << ',' << fmt(r.mse) << ','
          << fmt(r.seconds) << '\n';
    }
  }
  out.close();
  finish_manifest(manifest, args.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coolish: multi-outcome linear prediction by coordinate-wise "
               "optimal linear shrinkage of least squares fits"};
  app.set_version_flag("--version", COOLISH_VERSION);
  app.require_subcommand(1);

  const auto unit_interval = [](std::string& value) -> std::string {
    const double v = std::strtod(value.c_str(), nullptr);
    if (v >= 0.0 && v < 1.0) return {};
    return "must lie in [0, 1), got " + value;
  };
  const auto positive = [](std::string& value) -> std::string {
    const double v = std::strtod(value.c_str(), nullptr);
    if (v > 0.0) return {};
    return "must be positive, got " + value;
  };

  SimulateArgs sim;
  auto* simulate = app.add_subcommand(
      "simulate", "Run a seeded simulation grid cell and write per-method "
                  "per-replication test losses");
  simulate->add_option("--p", sim.cfg.p, "Predictor dimension")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--q", sim.cfg.q, "Outcome dimension")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--rho", sim.cfg.rho, "Outcome noise correlation")
      ->check(CLI::Validator(unit_interval, "RHO"));
  simulate
      ->add_option("--structure", sim.structure,
                   "Coefficient structure: dense, group, entry")
      ->check(CLI::IsMember({"dense", "group", "entry"}));
  simulate->add_option("--reps", sim.cfg.n_replications, "Replications")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--n-train", sim.cfg.n_train, "Training sample size")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--n-test", sim.cfg.n_test, "Test points per replication")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--M", sim.cfg.M, "Box bound for the constrained rule")
      ->check(CLI::Validator(positive, "POSITIVE"));
  simulate->add_option("--noise-scale", sim.cfg.noise_scale,
                       "Multiplier on the sampled noise (1 = model)")
      ->check(CLI::NonNegativeNumber);
  simulate->add_option("--seed", sim.cfg.seed, "RNG seed");
  simulate->add_option("--out", sim.out, "Output CSV path");
  simulate->add_option("--threads", sim.threads,
                       "Worker threads (0 = all cores)");

  FitPredictArgs fp;
  auto* fit_predict = app.add_subcommand(
      "fit-predict", "Fit on training CSVs and predict outcomes for test "
                     "covariates");
  fit_predict->add_option("--train-x", fp.train_x, "Training design CSV")
      ->required();
  fit_predict->add_option("--train-y", fp.train_y, "Training outcomes CSV")
      ->required();
  fit_predict->add_option("--test-x", fp.test_x, "Test covariates CSV")
      ->required();
  fit_predict
      ->add_option("--rule", fp.rule,
                   "Prediction rule: ols, unconstrained, constrained")
      ->check(CLI::IsMember({"ols", "unconstrained", "constrained"}));
  fit_predict->add_option("--M", fp.M, "Box bound for the constrained rule")
      ->check(CLI::Validator(positive, "POSITIVE"));
  fit_predict->add_option("--out", fp.out, "Predictions CSV path");
  fit_predict->add_option("--threads", fp.threads,
                          "Worker threads (0 = all cores)");

  PipelineArgs panel_args;
  panel_args.out = "panel.csv";
  auto* panel = app.add_subcommand(
      "panel", "Select probe gene panels by k-means on a training expression "
               "matrix");
  panel->add_option("--train", panel_args.train, "Training expression CSV")
      ->required();
  panel->add_option("--test", panel_args.test, "Test expression CSV")
      ->required();
  panel->add_option("--k", panel_args.ks, "Panel size (repeatable)")
      ->required();
  panel->add_option("--min-cells", panel_args.min_cells,
                    "Keep genes expressed in at least this many cells in both "
                    "datasets");
  panel->add_option("--seed", panel_args.seed, "RNG seed");
  panel->add_flag("--swap", panel_args.swap, "Swap the train/test roles");
  panel->add_option("--out", panel_args.out, "Panel CSV path");
  panel->add_option("--threads", panel_args.threads,
                    "Worker threads (0 = all cores)");

  PipelineArgs impute_args;
  impute_args.out = "impute_report.csv";
  auto* impute = app.add_subcommand(
      "impute", "Select panels and score cross-dataset imputation of the "
                "remaining genes");
  impute->add_option("--train", impute_args.train, "Training expression CSV")
      ->required();
  impute->add_option("--test", impute_args.test, "Test expression CSV")
      ->required();
  impute->add_option("--k", impute_args.ks, "Panel size (repeatable)")
      ->required();
  impute->add_option("--min-cells", impute_args.min_cells,
                     "Keep genes expressed in at least this many cells in "
                     "both datasets");
  impute->add_option("--seed", impute_args.seed, "RNG seed");
  impute->add_flag("--swap", impute_args.swap, "Swap the train/test roles");
  impute->add_option("--M", impute_args.M, "Box bound for the constrained rule")
      ->check(CLI::Validator(positive, "POSITIVE"));
  impute->add_flag("--no-intercept", impute_args.no_intercept,
                   "Drop the intercept column from the panel design");
  impute
      ->add_option("--rules", impute_args.rules,
                   "Rules to evaluate (repeatable): ols, unconstrained, "
                   "constrained")
      ->check(CLI::IsMember({"ols", "unconstrained", "constrained"}));
  impute->add_option("--out", impute_args.out, "Report CSV path");
  impute->add_option("--threads", impute_args.threads,
                     "Worker threads (0 = all cores)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (impute_args.rules.empty()) {
    impute_args.rules = {"ols", "unconstrained", "constrained"};
  }

  try {
    if (simulate->parsed()) return run_simulate(sim);
    if (fit_predict->parsed()) return run_fit_predict(fp);
    if (panel->parsed()) return run_panel(panel_args);
    if (impute->parsed()) return run_impute(impute_args);
  } catch (const IllPosed& e) {
    std::cerr << "error: " << e.what()
              << " (the constrained rule handles this case; try --rule "
                 "constrained)\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
