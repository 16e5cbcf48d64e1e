#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace orthoboot {

/// Dense row-major matrix of covariates; row i is observation i.
class CovariateMatrix {
 public:
  CovariateMatrix() = default;
  CovariateMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }

  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }

  std::span<const double> data() const noexcept { return data_; }

  bool operator==(const CovariateMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Ground-truth nuisance values attached by the simulators.
struct GroundTruth {
  double theta0 = 0.0;
  std::vector<double> e0;   ///< E(Z | X) at each observation
  std::vector<double> g0;   ///< treatment-free outcome part
  std::vector<double> ky0;  ///< E(Y | X) = theta0 * e0 + g0

  bool operator==(const GroundTruth&) const = default;
};

struct Observation {
  double y;
  double z;
  std::span<const double> x;
};

/// n observations O = (Y, Z, X).
struct Dataset {
  std::vector<double> y;
  std::vector<double> z;
  CovariateMatrix x;
  std::optional<GroundTruth> truth;

  std::size_t size() const noexcept { return y.size(); }
  std::size_t dim() const noexcept { return x.cols(); }
  Observation observation(std::size_t i) const { return {y[i], z[i], x.row(i)}; }

  /// Throws InvalidArgument when column lengths disagree.
  void validate() const;

  bool operator==(const Dataset&) const = default;
};

/// Headered comma-separated text: y,z,x1,...,xq. Values are written with 17
/// significant digits so a read-back is exact. Ground truth is not written.
void write_dataset_csv(const Dataset& data, std::ostream& out);
void write_dataset_csv(const Dataset& data, const std::filesystem::path& path);

Dataset read_dataset_csv(std::istream& in);
Dataset read_dataset_csv(const std::filesystem::path& path);

}  // namespace orthoboot
