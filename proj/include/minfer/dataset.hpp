#ifndef MINFER_DATASET_H
#define MINFER_DATASET_H

#include <string>
#include <vector>

#include "minfer/common.hpp"

namespace minfer {

/* Observations stored one flattened sample per column. */
struct Dataset {
  MatrixXd samples;

  int n() const { return static_cast<int>(samples.cols()); }
  int sample_size() const { return static_cast<int>(samples.rows()); }
};

/* CSV: one flattened sample per row (column-major order of the ambient
 * array), comma separated. Binary: "MNFERBIN" magic, then int64 sample_size
 * and int64 n, then column-major little-endian doubles. */
Dataset read_samples_csv(const std::string& path);
void write_samples_csv(const std::string& path, const Dataset& data);
Dataset read_samples_binary(const std::string& path);
void write_samples_binary(const std::string& path, const Dataset& data);

/* Dispatch on extension: ".bin" binary, anything else CSV. */
Dataset read_samples(const std::string& path);

Dataset resample(const Dataset& data, const std::vector<int>& indices);

/* Parse one CSV row of doubles (used for θ vectors as well as samples). */
VectorXd parse_csv_row(const std::string& line, const std::string& what);

}  // namespace minfer

#endif
