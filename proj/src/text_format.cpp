#include "minfer/text_format.hpp"

#include <charconv>
#include <fstream>

namespace minfer {

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  return out;
}

}  // namespace

void write_series_csv(const std::string& path, const std::vector<double>& values) {
  auto out = open_out(path);
  for (double v : values) out << format_double(v) << '\n';
  if (!out) throw DataError("write failed for '" + path + "'");
}

void write_matrix_csv(const std::string& path, const MatrixXd& m) {
  auto out = open_out(path);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out.put(',');
      out << format_double(m(i, j));
    }
    out.put('\n');
  }
  if (!out) throw DataError("write failed for '" + path + "'");
}

void write_row_csv(const std::string& path, const VectorXd& v) {
  auto out = open_out(path);
  out << join_csv(v) << '\n';
  if (!out) throw DataError("write failed for '" + path + "'");
}

std::string join_csv(const VectorXd& v) {
  std::string line;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) line.push_back(',');
    line += format_double(v(i));
  }
  return line;
}

}  // namespace minfer
