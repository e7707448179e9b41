#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "coolish/genomics.hpp"

namespace coolish {

// Plain numeric matrix; a non-numeric first row is treated as a header and
// skipped. Transparently reads gzip-compressed files.
Eigen::MatrixXd read_matrix_csv(const std::string& path);

// Writes with round-trippable %.17g formatting; header optional.
void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m,
                      const std::vector<std::string>& header = {});

// Expression CSV: first row = gene ids, one row per cell, non-negative
// entries. Gzip input accepted. Returns a RawCounts-stage matrix.
ExpressionMatrix read_expression_csv(const std::string& path);

void write_expression_csv(const std::string& path, const ExpressionMatrix& m);

}  // namespace coolish
