#include "glassbox/csv.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace glassbox::csv {
namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  fields.push_back(field);
  return fields;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

}  // namespace

int Table::column(const std::string& name) const {
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] == name) return static_cast<int>(j);
  return -1;
}

Table parse_table(const std::string& text) {
  Table table;
  std::istringstream in(text);
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto fields = split_line(line);
    for (auto& f : fields) f = trim(f);
    if (!have_header) {
      table.header = std::move(fields);
      have_header = true;
    } else {
      if (fields.size() != table.header.size())
        throw std::runtime_error("csv: row has " + std::to_string(fields.size()) +
                                 " fields, header has " + std::to_string(table.header.size()));
      table.rows.push_back(std::move(fields));
    }
  }
  if (!have_header) throw std::runtime_error("csv: no header row");
  return table;
}

Table read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("csv: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_table(buf.str());
}

double to_real(const std::string& cell) {
  const std::size_t b = cell.find_first_not_of(" \t");
  const std::size_t e = cell.find_last_not_of(" \t");
  if (b == std::string::npos) throw std::runtime_error("csv: not a number: '" + cell + "'");
  const std::string t = cell.substr(b, e - b + 1);
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  // ERANGE with a finite result is a rounded subnormal, which is fine; only
  // overflow to infinity is rejected.
  if (end == t.c_str() || *end != '\0' || (errno == ERANGE && std::isinf(v)))
    throw std::runtime_error("csv: not a number: '" + cell + "'");
  return v;
}

Eigen::MatrixXd numeric_matrix(const Table& table) {
  const auto n = static_cast<Eigen::Index>(table.rows.size());
  const auto k = static_cast<Eigen::Index>(table.header.size());
  Eigen::MatrixXd m(n, k);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < k; ++j)
      m(i, j) = to_real(table.rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
  return m;
}

Eigen::VectorXd numeric_column(const Table& table, int index) {
  if (index < 0 || static_cast<std::size_t>(index) >= table.header.size())
    throw std::runtime_error("csv: column index out of range");
  const auto n = static_cast<Eigen::Index>(table.rows.size());
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i)
    v(i) = to_real(table.rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(index)]);
  return v;
}

std::string format_real(double x) {
  char buf[40];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

void write_table(const std::string& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows, const std::string& comment) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("csv: cannot write " + path);
  if (!comment.empty()) out << "# " << comment << "\n";
  for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
  out << "\n";
  for (const auto& row : rows) {
    if (row.size() != header.size()) throw std::runtime_error("csv: ragged row on write");
    for (std::size_t j = 0; j < row.size(); ++j) out << (j ? "," : "") << row[j];
    out << "\n";
  }
  if (!out) throw std::runtime_error("csv: write failed for " + path);
}

}  // namespace glassbox::csv
