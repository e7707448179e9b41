#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "coolish/rng.hpp"
#include "coolish/shrinkage.hpp"

namespace coolish {

// Pipeline stage machine: raw counts -> counts-per-million -> log10(x+1.01).
enum class Stage { RawCounts, CPM, LogTransformed };

std::string stage_name(Stage s);

// cells x genes expression values with gene identifiers.
struct ExpressionMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> gene_ids;
  Stage stage = Stage::RawCounts;

  Eigen::Index cells() const { return values.rows(); }
  Eigen::Index genes() const { return values.cols(); }
};

// Checks gene id count/uniqueness and (for RawCounts/CPM) non-negativity.
void validate_expression(const ExpressionMatrix& m);

struct PanelSelection {
  std::vector<int> panel_indices;  // K distinct gene column indices
  int K = 0;
  std::vector<int> assignments;    // cluster id per gene
};

// Scales every cell (row) to a total of one million counts.
// Throws StageError unless stage is RawCounts; EmptyCell if a row sums to 0.
ExpressionMatrix cpm_normalize(const ExpressionMatrix& m);

// Elementwise log10(x + 1.01). Throws StageError unless stage is CPM.
ExpressionMatrix log_transform(const ExpressionMatrix& m);

// Gene ids (in a's column order) expressed -- nonzero -- in at least
// min_cells cells in BOTH datasets. Both inputs must be RawCounts.
std::vector<std::string> filter_genes(const ExpressionMatrix& a,
                                      const ExpressionMatrix& b,
                                      int min_cells = 300);

// Restriction to the given gene ids, in the given order.
ExpressionMatrix subset_genes(const ExpressionMatrix& m,
                              const std::vector<std::string>& ids);

// K-means over genes as points in cell-space; each cluster contributes the
// member gene closest to its centroid (ties broken by lowest gene index).
// Always returns exactly K distinct panel genes. Input must be
// LogTransformed and 1 <= K <= genes; K = genes makes every gene its own
// panel member.
PanelSelection select_panel_kmeans(const ExpressionMatrix& train, int K,
                                   Rng& rng);

struct ImputationOptions {
  double M = kDefaultBound;
  bool intercept = true;  // prepend an all-ones column to the panel design
  int n_threads = 1;
};

struct ImputationRuleResult {
  Rule rule = Rule::Ols;
  double mse = 0.0;
  double seconds = 0.0;
  bool ok = true;
  std::string message;
};

std::string rule_name(Rule r);

// Fits outcome genes on panel genes in `train`, predicts every `test` cell's
// outcome genes from its panel genes under each rule, and reports the mean
// squared prediction error and wall-clock seconds per rule. A rule that is
// ill posed for this panel is reported with ok = false instead of aborting
// the others.
std::vector<ImputationRuleResult> evaluate_imputation(
    const ExpressionMatrix& train, const ExpressionMatrix& test,
    const PanelSelection& panel, const std::vector<Rule>& rules,
    const ImputationOptions& opts = {});

// Synthetic raw-count fixture with grouped gene programs, library-size
// variation, and dropout; stands in for real data in tests and demos.
ExpressionMatrix synthetic_counts(int cells, int genes, std::uint64_t seed);

}  // namespace coolish
