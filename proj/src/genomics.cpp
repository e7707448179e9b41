#include "coolish/genomics.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <unordered_map>
#include <unordered_set>

#include "coolish/kmeans.hpp"
#include "coolish/ols.hpp"
#include "coolish/parallel.hpp"

namespace coolish {

namespace {

void require_stage(const ExpressionMatrix& m, Stage expected,
                   const char* where) {
  if (m.stage != expected) {
    throw StageError(std::string(where) + ": expected " +
                     stage_name(expected) + " input, got " +
                     stage_name(m.stage));
  }
}

}  // namespace

std::string stage_name(Stage s) {
  switch (s) {
    case Stage::RawCounts: return "raw-counts";
    case Stage::CPM: return "cpm";
    case Stage::LogTransformed: return "log-transformed";
  }
  return "unknown";
}

std::string rule_name(Rule r) {
  switch (r) {
    case Rule::Ols: return "ols";
    case Rule::Unconstrained: return "coolish-unconstrained";
    case Rule::Constrained: return "coolish-constrained";
  }
  return "unknown";
}

void validate_expression(const ExpressionMatrix& m) {
  if (static_cast<Eigen::Index>(m.gene_ids.size()) != m.values.cols()) {
    throw ShapeMismatch("expression matrix has " +
                        std::to_string(m.values.cols()) + " columns but " +
                        std::to_string(m.gene_ids.size()) + " gene ids");
  }
  std::unordered_set<std::string> seen;
  for (const auto& id : m.gene_ids) {
    if (!seen.insert(id).second) {
      throw InvalidConfig("duplicate gene id: " + id);
    }
  }
  if (m.stage != Stage::LogTransformed && m.values.size() > 0 &&
      m.values.minCoeff() < 0.0) {
    throw InvalidConfig("negative entry in " + stage_name(m.stage) +
                        " expression matrix");
  }
}

ExpressionMatrix cpm_normalize(const ExpressionMatrix& m) {
  require_stage(m, Stage::RawCounts, "cpm_normalize");
  ExpressionMatrix out = m;
  for (Eigen::Index i = 0; i < m.cells(); ++i) {
    const double total = m.values.row(i).sum();
    if (total <= 0.0) {
      throw EmptyCell("cpm_normalize: cell " + std::to_string(i) +
                      " has zero total counts");
    }
    out.values.row(i) *= 1e6 / total;
  }
  out.stage = Stage::CPM;
  return out;
}

ExpressionMatrix log_transform(const ExpressionMatrix& m) {
  require_stage(m, Stage::CPM, "log_transform");
  ExpressionMatrix out = m;
  out.values = (m.values.array() + 1.01).log10();
  out.stage = Stage::LogTransformed;
  return out;
}

std::vector<std::string> filter_genes(const ExpressionMatrix& a,
                                      const ExpressionMatrix& b,
                                      int min_cells) {
  require_stage(a, Stage::RawCounts, "filter_genes");
  require_stage(b, Stage::RawCounts, "filter_genes");

  auto expressed_cells = [](const ExpressionMatrix& m, Eigen::Index g) {
    return static_cast<int>((m.values.col(g).array() > 0.0).count());
  };

  std::unordered_map<std::string, Eigen::Index> b_index;
  for (Eigen::Index g = 0; g < b.genes(); ++g) b_index[b.gene_ids[g]] = g;

  std::vector<std::string> kept;
  for (Eigen::Index g = 0; g < a.genes(); ++g) {
    const auto it = b_index.find(a.gene_ids[g]);
    if (it == b_index.end()) continue;
    if (expressed_cells(a, g) >= min_cells &&
        expressed_cells(b, it->second) >= min_cells) {
      kept.push_back(a.gene_ids[g]);
    }
  }
  return kept;
}

ExpressionMatrix subset_genes(const ExpressionMatrix& m,
                              const std::vector<std::string>& ids) {
  std::unordered_map<std::string, Eigen::Index> index;
  for (Eigen::Index g = 0; g < m.genes(); ++g) index[m.gene_ids[g]] = g;

  ExpressionMatrix out;
  out.stage = m.stage;
  out.gene_ids = ids;
  out.values.resize(m.cells(), static_cast<Eigen::Index>(ids.size()));
  for (std::size_t j = 0; j < ids.size(); ++j) {
    const auto it = index.find(ids[j]);
    if (it == index.end()) {
      throw InvalidConfig("subset_genes: gene id not present: " + ids[j]);
    }
    out.values.col(static_cast<Eigen::Index>(j)) = m.values.col(it->second);
  }
  return out;
}

PanelSelection select_panel_kmeans(const ExpressionMatrix& train, int K,
                                   Rng& rng) {
  require_stage(train, Stage::LogTransformed, "select_panel_kmeans");
  const Eigen::Index genes = train.genes();
  if (K < 1 || K > genes) {
    throw InvalidConfig("select_panel_kmeans: need 1 <= K <= genes, got K=" +
                        std::to_string(K) + " with " + std::to_string(genes) +
                        " genes");
  }

  // Genes are the points; each gene is its vector of values across cells.
  const Eigen::MatrixXd points = train.values.transpose();
  const KMeansResult km = kmeans(points, K, rng);

  PanelSelection sel;
  sel.K = K;
  sel.assignments = km.assignments;
  sel.panel_indices.assign(K, -1);

  std::vector<double> best_d(K, std::numeric_limits<double>::infinity());
  for (Eigen::Index g = 0; g < genes; ++g) {
    const int c = km.assignments[g];
    const double d =
        (points.row(g) - km.centroids.row(c)).squaredNorm();
    if (d < best_d[c]) {  // strict: ties keep the lowest gene index
      best_d[c] = d;
      sel.panel_indices[c] = static_cast<int>(g);
    }
  }

  // A cluster can end empty only on pathological duplicate data; still
  // guarantee K distinct panel genes by assigning the farthest unused gene.
  std::unordered_set<int> taken(sel.panel_indices.begin(),
                                sel.panel_indices.end());
  for (int c = 0; c < K; ++c) {
    if (sel.panel_indices[c] >= 0) continue;
    int far = -1;
    double far_d = -1.0;
    for (Eigen::Index g = 0; g < genes; ++g) {
      if (taken.count(static_cast<int>(g))) continue;
      const double d = (points.row(g) - km.centroids.row(c)).squaredNorm();
      if (d > far_d) {
        far_d = d;
        far = static_cast<int>(g);
      }
    }
    sel.panel_indices[c] = far;
    sel.assignments[far] = c;
    taken.insert(far);
  }
  return sel;
}

std::vector<ImputationRuleResult> evaluate_imputation(
    const ExpressionMatrix& train, const ExpressionMatrix& test,
    const PanelSelection& panel, const std::vector<Rule>& rules,
    const ImputationOptions& opts) {
  require_stage(train, Stage::LogTransformed, "evaluate_imputation");
  require_stage(test, Stage::LogTransformed, "evaluate_imputation");
  if (train.gene_ids != test.gene_ids) {
    throw ShapeMismatch(
        "evaluate_imputation: train and test gene sets differ");
  }

  const Eigen::Index genes = train.genes();
  std::vector<char> in_panel(genes, 0);
  for (const int g : panel.panel_indices) {
    if (g < 0 || g >= genes) {
      throw ShapeMismatch("evaluate_imputation: panel index out of range");
    }
    in_panel[g] = 1;
  }

  std::vector<Eigen::Index> outcome_cols;
  for (Eigen::Index g = 0; g < genes; ++g) {
    if (!in_panel[g]) outcome_cols.push_back(g);
  }
  if (outcome_cols.empty()) {
    throw InvalidConfig("evaluate_imputation: no outcome genes left");
  }

  const Eigen::Index p_raw = static_cast<Eigen::Index>(panel.panel_indices.size());
  const Eigen::Index p = p_raw + (opts.intercept ? 1 : 0);
  const Eigen::Index q = static_cast<Eigen::Index>(outcome_cols.size());

  auto build_design = [&](const ExpressionMatrix& m) {
    Eigen::MatrixXd X(m.cells(), p);
    Eigen::Index col = 0;
    if (opts.intercept) X.col(col++).setOnes();
    for (const int g : panel.panel_indices) X.col(col++) = m.values.col(g);
    return X;
  };
  auto build_outcomes = [&](const ExpressionMatrix& m) {
    Eigen::MatrixXd Y(m.cells(), q);
    for (Eigen::Index j = 0; j < q; ++j) Y.col(j) = m.values.col(outcome_cols[j]);
    return Y;
  };

  const Eigen::MatrixXd X_train = build_design(train);
  const Eigen::MatrixXd Y_train = build_outcomes(train);
  const Eigen::MatrixXd X_test = build_design(test);
  const Eigen::MatrixXd Y_test = build_outcomes(test);

  const OlsFit fit = fit_ols({X_train, Y_train});
  const Eigen::Index cells = test.cells();

  std::vector<ImputationRuleResult> results;
  for (const Rule rule : rules) {
    ImputationRuleResult r;
    r.rule = rule;
    const auto start = std::chrono::steady_clock::now();
    try {
      std::vector<double> cell_sq(cells, 0.0);
      parallel_for(static_cast<int>(cells), opts.n_threads, [&](int i) {
        const Eigen::VectorXd pred =
            predict_point(fit, X_test.row(i).transpose(), rule, opts.M);
        cell_sq[i] = (pred - Y_test.row(i).transpose()).squaredNorm();
      });
      double total = 0.0;
      for (const double s : cell_sq) total += s;
      r.mse = total / (double(cells) * double(q));
    } catch (const IllPosed& e) {
      r.ok = false;
      r.mse = std::numeric_limits<double>::quiet_NaN();
      r.message = e.what();
    }
    r.seconds = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - start)
                    .count();
    results.push_back(std::move(r));
  }
  return results;
}

ExpressionMatrix synthetic_counts(int cells, int genes, std::uint64_t seed) {
  if (cells < 1 || genes < 1) {
    throw InvalidConfig("synthetic_counts: cells and genes must be >= 1");
  }
  constexpr int kGroups = 8;
  Rng rng = Rng::substream(seed, 0xE9F1ULL);

  ExpressionMatrix m;
  m.stage = Stage::RawCounts;
  m.gene_ids.reserve(genes);
  for (int g = 0; g < genes; ++g) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "g%04d", g + 1);
    m.gene_ids.emplace_back(buf);
  }

  Eigen::VectorXd base_rate(genes);
  for (int g = 0; g < genes; ++g) {
    base_rate[g] = 2.0 * std::exp(rng.uniform() * std::log(30.0));
  }
  Eigen::VectorXd cell_size(cells);
  for (int c = 0; c < cells; ++c) {
    cell_size[c] = std::exp(0.3 * rng.normal());
  }

  m.values.resize(cells, genes);
  for (int g = 0; g < genes; ++g) {
    const int group = g % kGroups;
    for (int c = 0; c < cells; ++c) {
      if (rng.bernoulli(0.25)) {
        m.values(c, g) = 0.0;
        continue;
      }
      const double enriched = (c % kGroups == group) ? 4.0 : 1.0;
      const double rate =
          base_rate[g] * enriched * cell_size[c] * std::exp(0.4 * rng.normal());
      m.values(c, g) = std::max(0.0, std::round(rate));
    }
  }
  return m;
}

}  // namespace coolish
