#include "coolish/csv.hpp"

#include <zlib.h>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "coolish/errors.hpp"

namespace coolish {

namespace {

// gzFile reads both gzip-compressed and plain files.
std::string slurp(const std::string& path) {
  gzFile file = gzopen(path.c_str(), "rb");
  if (!file) throw ParseError("cannot open " + path);
  std::string content;
  char buf[1 << 16];
  int got;
  while ((got = gzread(file, buf, sizeof(buf))) > 0) {
    content.append(buf, static_cast<std::size_t>(got));
  }
  const bool failed = got < 0;
  gzclose(file);
  if (failed) throw ParseError("read error in " + path);
  return content;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    std::string field = line.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start);
    // Trim surrounding whitespace and a trailing carriage return.
    const auto first = field.find_first_not_of(" \t\r");
    const auto last = field.find_last_not_of(" \t\r");
    fields.push_back(first == std::string::npos
                         ? std::string{}
                         : field.substr(first, last - first + 1));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return fields;
}

bool parse_double(const std::string& field, double& out) {
  const char* begin = field.data();
  const char* end = begin + field.size();
  const auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

std::vector<std::vector<std::string>> read_rows(const std::string& path) {
  const std::string content = slurp(path);
  std::vector<std::vector<std::string>> rows;
  std::istringstream stream(content);
  std::string line;
  while (std::getline(stream, line)) {
    if (line.empty() || line == "\r") continue;
    rows.push_back(split_fields(line));
  }
  if (rows.empty()) throw ParseError(path + " is empty");
  return rows;
}

// Shortest decimal form that parses back to the same double.
std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

Eigen::MatrixXd read_matrix_csv(const std::string& path) {
  const auto rows = read_rows(path);

  double probe;
  bool header = false;
  for (const auto& field : rows[0]) {
    if (!parse_double(field, probe)) {
      header = true;
      break;
    }
  }
  const std::size_t first_row = header ? 1 : 0;
  if (first_row >= rows.size()) {
    throw ParseError(path + " has a header but no data rows");
  }

  const std::size_t cols = rows[first_row].size();
  Eigen::MatrixXd m(rows.size() - first_row, cols);
  for (std::size_t i = first_row; i < rows.size(); ++i) {
    if (rows[i].size() != cols) {
      throw ParseError(path + ": row " + std::to_string(i + 1) + " has " +
                       std::to_string(rows[i].size()) + " fields, expected " +
                       std::to_string(cols));
    }
    for (std::size_t j = 0; j < cols; ++j) {
      if (!parse_double(rows[i][j], m(i - first_row, j))) {
        throw ParseError(path + ": row " + std::to_string(i + 1) +
                         ", field " + std::to_string(j + 1) +
                         " is not numeric: '" + rows[i][j] + "'");
      }
    }
  }
  return m;
}

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m,
                      const std::vector<std::string>& header) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  if (!header.empty()) {
    for (std::size_t j = 0; j < header.size(); ++j) {
      out << (j ? "," : "") << header[j];
    }
    out << '\n';
  }
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      out << (j ? "," : "") << fmt(m(i, j));
    }
    out << '\n';
  }
}

ExpressionMatrix read_expression_csv(const std::string& path) {
  const auto rows = read_rows(path);
  if (rows.size() < 2) {
    throw ParseError(path + ": expected a gene-id header and cell rows");
  }

  ExpressionMatrix m;
  m.stage = Stage::RawCounts;
  m.gene_ids = rows[0];
  const std::size_t genes = m.gene_ids.size();

  m.values.resize(rows.size() - 1, genes);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != genes) {
      throw ParseError(path + ": cell row " + std::to_string(i + 1) + " has " +
                       std::to_string(rows[i].size()) + " fields, expected " +
                       std::to_string(genes) + " genes");
    }
    for (std::size_t j = 0; j < genes; ++j) {
      double v;
      if (!parse_double(rows[i][j], v)) {
        throw ParseError(path + ": gene '" + m.gene_ids[j] + "', cell row " +
                         std::to_string(i + 1) + ": non-numeric entry '" +
                         rows[i][j] + "'");
      }
      if (v < 0.0) {
        throw ParseError(path + ": gene '" + m.gene_ids[j] + "', cell row " +
                         std::to_string(i + 1) + ": negative count " +
                         rows[i][j]);
      }
      m.values(static_cast<Eigen::Index>(i - 1),
               static_cast<Eigen::Index>(j)) = v;
    }
  }
  try {
    validate_expression(m);
  } catch (const std::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  return m;
}

void write_expression_csv(const std::string& path, const ExpressionMatrix& m) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  for (std::size_t j = 0; j < m.gene_ids.size(); ++j) {
    out << (j ? "," : "") << m.gene_ids[j];
  }
  out << '\n';
  for (Eigen::Index i = 0; i < m.values.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.values.cols(); ++j) {
      out << (j ? "," : "") << fmt(m.values(i, j));
    }
    out << '\n';
  }
}

}  // namespace coolish
