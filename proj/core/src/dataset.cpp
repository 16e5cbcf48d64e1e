#include "orthoboot/dataset.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "orthoboot/error.hpp"

namespace orthoboot {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream stream(line);
  while (std::getline(stream, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
    std::size_t start = field.find_first_not_of(' ');
    fields.push_back(start == std::string::npos ? std::string{} : field.substr(start));
  }
  return fields;
}

double parse_double(const std::string& text, std::size_t line_no) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) {
    throw IoError("dataset line " + std::to_string(line_no) + ": cannot parse '" + text + "'");
  }
  return value;
}

}  // namespace

void Dataset::validate() const {
  if (z.size() != y.size() || x.rows() != y.size()) {
    throw InvalidArgument("Dataset: y, z and x row counts differ");
  }
  if (truth) {
    const auto n = y.size();
    if (truth->e0.size() != n || truth->g0.size() != n || truth->ky0.size() != n) {
      throw InvalidArgument("Dataset: ground truth length differs from n");
    }
  }
}

void write_dataset_csv(const Dataset& data, std::ostream& out) {
  data.validate();
  out << "y,z";
  for (std::size_t j = 0; j < data.dim(); ++j) {
    out << ",x" << (j + 1);
  }
  out << '\n';
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
  };
  for (std::size_t i = 0; i < data.size(); ++i) {
    put(data.y[i]);
    out << ',';
    put(data.z[i]);
    for (double v : data.x.row(i)) {
      out << ',';
      put(v);
    }
    out << '\n';
  }
}

void write_dataset_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open '" + path.string() + "' for writing");
  }
  write_dataset_csv(data, out);
  if (!out) {
    throw IoError("write failed for '" + path.string() + "'");
  }
}

Dataset read_dataset_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw IoError("dataset: missing header");
  }
  const auto header = split_fields(line);
  if (header.size() < 3 || header[0] != "y" || header[1] != "z") {
    throw IoError("dataset: header must be y,z,x1,...,xq");
  }
  const std::size_t q = header.size() - 2;

  Dataset data;
  std::vector<double> xs;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw IoError("dataset line " + std::to_string(line_no) + ": expected " +
                    std::to_string(header.size()) + " fields");
    }
    data.y.push_back(parse_double(fields[0], line_no));
    data.z.push_back(parse_double(fields[1], line_no));
    for (std::size_t j = 0; j < q; ++j) {
      xs.push_back(parse_double(fields[j + 2], line_no));
    }
  }
  data.x = CovariateMatrix(data.y.size(), q);
  for (std::size_t i = 0; i < data.y.size(); ++i) {
    for (std::size_t j = 0; j < q; ++j) {
      data.x(i, j) = xs[i * q + j];
    }
  }
  return data;
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open '" + path.string() + "' for reading");
  }
  return read_dataset_csv(in);
}

}  // namespace orthoboot
