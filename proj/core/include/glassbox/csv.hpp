#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace glassbox::csv {

// Header + cell strings.  Lines starting with '#' are treated as comments
// and skipped, so versioned files ("# schema_version=1") load transparently.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 when absent
};

Table read_table(const std::string& path);
Table parse_table(const std::string& text);

double to_real(const std::string& cell);

// All columns parsed as reals, in header order.
Eigen::MatrixXd numeric_matrix(const Table& table);

// One column parsed as reals.
Eigen::VectorXd numeric_column(const Table& table, int index);

std::string format_real(double x);  // shortest exact round-trip ("%.17g" trimmed)

void write_table(const std::string& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows,
                 const std::string& comment = "");

}  // namespace glassbox::csv
