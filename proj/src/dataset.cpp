#include "minfer/dataset.hpp"

#include <charconv>
#include <cstring>
#include <fstream>
#include <vector>

namespace minfer {

namespace {

constexpr char kMagic[8] = {'M', 'N', 'F', 'E', 'R', 'B', 'I', 'N'};

bool parse_double(const char* first, const char* last, double& out) {
  while (first < last && (*first == ' ' || *first == '\t')) ++first;
  while (last > first && (last[-1] == ' ' || last[-1] == '\t' || last[-1] == '\r')) --last;
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last && first != last;
}

}  // namespace

VectorXd parse_csv_row(const std::string& line, const std::string& what) {
  std::vector<double> vals;
  const char* p = line.data();
  const char* end = p + line.size();
  while (p <= end) {
    const char* comma = static_cast<const char*>(memchr(p, ',', static_cast<size_t>(end - p)));
    if (!comma) comma = end;
    double v;
    if (!parse_double(p, comma, v)) {
      throw DataError(what + ": cannot parse '" + std::string(p, comma) + "' as a number");
    }
    vals.push_back(v);
    p = comma + 1;
  }
  VectorXd out(static_cast<int>(vals.size()));
  for (size_t i = 0; i < vals.size(); ++i) out(static_cast<int>(i)) = vals[i];
  return out;
}

Dataset read_samples_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::vector<VectorXd> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    bool blank = true;
    for (char c : line) {
      if (c != ' ' && c != '\t' && c != '\r') {
        blank = false;
        break;
      }
    }
    if (blank) continue;
    rows.push_back(parse_csv_row(line, path + ":" + std::to_string(lineno)));
    if (rows.size() > 1 && rows.back().size() != rows.front().size()) {
      throw DataError(path + ":" + std::to_string(lineno) + ": row width " +
                      std::to_string(rows.back().size()) + " != " +
                      std::to_string(rows.front().size()));
    }
  }
  if (rows.empty()) throw DataError(path + ": no samples");
  Dataset d;
  d.samples.resize(rows.front().size(), static_cast<int>(rows.size()));
  for (size_t i = 0; i < rows.size(); ++i) d.samples.col(static_cast<int>(i)) = rows[i];
  if (!d.samples.allFinite()) throw DataError(path + ": non-finite values");
  return d;
}

void write_samples_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  char buf[64];
  for (int i = 0; i < data.n(); ++i) {
    for (int j = 0; j < data.sample_size(); ++j) {
      const auto res = std::to_chars(buf, buf + sizeof buf, data.samples(j, i));
      if (j) out.put(',');
      out.write(buf, res.ptr - buf);
    }
    out.put('\n');
  }
  if (!out) throw DataError("write failed for '" + path + "'");
}

Dataset read_samples_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  char magic[8];
  std::int64_t dims[2];
  in.read(magic, 8);
  in.read(reinterpret_cast<char*>(dims), sizeof dims);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) {
    throw DataError(path + ": not a sample container");
  }
  if (dims[0] <= 0 || dims[1] <= 0 || dims[0] * dims[1] > (1LL << 32)) {
    throw DataError(path + ": implausible shape header");
  }
  Dataset d;
  d.samples.resize(dims[0], dims[1]);
  in.read(reinterpret_cast<char*>(d.samples.data()),
          static_cast<std::streamsize>(sizeof(double) * static_cast<size_t>(dims[0]) *
                                       static_cast<size_t>(dims[1])));
  if (!in) throw DataError(path + ": truncated payload");
  if (!d.samples.allFinite()) throw DataError(path + ": non-finite values");
  return d;
}

void write_samples_binary(const std::string& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  std::int64_t dims[2] = {data.sample_size(), data.n()};
  out.write(kMagic, 8);
  out.write(reinterpret_cast<const char*>(dims), sizeof dims);
  out.write(reinterpret_cast<const char*>(data.samples.data()),
            static_cast<std::streamsize>(sizeof(double) * data.samples.size()));
  if (!out) throw DataError("write failed for '" + path + "'");
}

Dataset read_samples(const std::string& path) {
  if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".bin") == 0) {
    return read_samples_binary(path);
  }
  return read_samples_csv(path);
}

Dataset resample(const Dataset& data, const std::vector<int>& indices) {
  Dataset out;
  out.samples.resize(data.sample_size(), static_cast<int>(indices.size()));
  for (size_t i = 0; i < indices.size(); ++i) {
    out.samples.col(static_cast<int>(i)) = data.samples.col(indices[i]);
  }
  return out;
}

}  // namespace minfer
