#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "orthoboot/dataset.hpp"

namespace orthoboot {

/// A fitted regression function. Implementations must be deterministic and
/// safe to call concurrently.
class PredictorModel {
 public:
  virtual ~PredictorModel() = default;
  virtual double predict(std::span<const double> x) const = 0;
};

/// Immutable, cheaply copyable handle to a fitted regression function.
class Predictor {
 public:
  using Function = std::function<double(std::span<const double>)>;

  Predictor() = default;
  explicit Predictor(std::shared_ptr<const PredictorModel> model) : model_(std::move(model)) {}

  static Predictor from_function(Function fn);
  static Predictor constant(double value);

  double predict(std::span<const double> x) const;
  std::vector<double> predict_rows(const CovariateMatrix& x) const;

  explicit operator bool() const noexcept { return model_ != nullptr; }

 private:
  std::shared_ptr<const PredictorModel> model_;
};

struct ForestConfig {
  /// Sentinel for `max_features` meaning "every covariate".
  static constexpr std::size_t kAllFeatures = std::numeric_limits<std::size_t>::max();

  std::size_t num_trees = 200;
  /// Each tree sees floor(n^subsample_exponent) observations drawn without
  /// replacement; 1 grows every tree on the full sample.
  double subsample_exponent = 0.49;
  std::size_t min_leaf = 5;
  /// Candidate features per split; unset means ceil(q / 3).
  std::optional<std::size_t> max_features;
  std::uint64_t seed = 0;
  /// Trees are grown on up to this many threads (0 = hardware concurrency).
  std::size_t threads = 1;

  void validate() const;
  std::size_t subsample_size(std::size_t n) const;
  std::size_t features_per_split(std::size_t q) const;
};

/// Regression forest: variance-reduction splits at midpoints between sorted
/// unique values, leaf value = mean target, prediction = mean over trees.
Predictor fit_forest(const CovariateMatrix& x, std::span<const double> y, const ForestConfig& cfg);

/// 1.06 * sd(x) * n^(-1/5).
double silverman_bandwidth(std::span<const double> x);

/// Univariate Nadaraya-Watson smoother with a Gaussian kernel. Queries read
/// the first coordinate of the supplied vector. A missing bandwidth selects
/// Silverman's rule. Queries whose kernel mass underflows return the target
/// of the nearest training point.
Predictor fit_kernel(std::span<const double> x, std::span<const double> y,
                     std::optional<double> bandwidth = std::nullopt);

struct ClampSpec {
  double epsilon = 0.01;
};

/// Wraps p so that predictions lie in [epsilon, 1 - epsilon].
Predictor clamp_propensity(Predictor p, ClampSpec spec);

}  // namespace orthoboot
