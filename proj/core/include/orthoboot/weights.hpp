#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "orthoboot/random.hpp"

namespace orthoboot {

/// How bootstrap weights are generated. `equal` gives the empirical measure
/// (every weight 1/n) and reproduces the frequentist solution.
enum class WeightScheme { dirichlet, multinomial, equal };

std::string_view to_string(WeightScheme scheme) noexcept;
WeightScheme parse_weight_scheme(std::string_view name);

/// n non-negative weights summing to one.
class WeightVector {
 public:
  /// Validates non-negativity and unit sum (renormalizing once if the sum is
  /// off by more than 1e-12).
  WeightVector(std::vector<double> weights, WeightScheme scheme);

  std::size_t size() const noexcept { return weights_.size(); }
  WeightScheme scheme() const noexcept { return scheme_; }
  std::span<const double> values() const noexcept { return weights_; }
  double operator[](std::size_t i) const { return weights_[i]; }

 private:
  std::vector<double> weights_;
  WeightScheme scheme_;
};

/// Dirichlet(1, ..., 1) via normalized standard exponentials.
WeightVector draw_dirichlet(std::size_t n, RandomStream& rng);

/// Efron's bootstrap: counts of n equiprobable draws over n cells, divided by n.
WeightVector draw_multinomial(std::size_t n, RandomStream& rng);

WeightVector equal_weights(std::size_t n);

WeightVector draw_weights(WeightScheme scheme, std::size_t n, RandomStream& rng);

/// (1/n) * sum_i (n w_i - 1)^2. Tends to 1 for both random schemes.
double weight_dispersion(std::span<const double> w);

}  // namespace orthoboot
