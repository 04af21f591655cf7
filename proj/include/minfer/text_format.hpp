#ifndef MINFER_TEXT_FORMAT_H
#define MINFER_TEXT_FORMAT_H

#include <string>
#include <vector>

#include "minfer/common.hpp"

namespace minfer {

/* Shortest decimal that round-trips to the same double. */
std::string format_double(double x);

/* One value per line, no header. */
void write_series_csv(const std::string& path, const std::vector<double>& values);

/* One comma-separated line per matrix row. */
void write_matrix_csv(const std::string& path, const MatrixXd& m);

/* A single comma-separated row. */
void write_row_csv(const std::string& path, const VectorXd& v);

std::string join_csv(const VectorXd& v);

}  // namespace minfer

#endif
