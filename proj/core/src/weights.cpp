#include "orthoboot/weights.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "orthoboot/error.hpp"

namespace orthoboot {

namespace {

constexpr double kSumTolerance = 1e-12;

void require_positive(std::size_t n, const char* op) {
  if (n == 0) {
    throw InvalidArgument(std::string(op) + ": n must be at least 1");
  }
}

double sum_of(const std::vector<double>& w) {
  return std::accumulate(w.begin(), w.end(), 0.0);
}

}  // namespace

std::string_view to_string(WeightScheme scheme) noexcept {
  switch (scheme) {
    case WeightScheme::dirichlet: return "dirichlet";
    case WeightScheme::multinomial: return "multinomial";
    case WeightScheme::equal: return "equal";
  }
  return "unknown";
}

WeightScheme parse_weight_scheme(std::string_view name) {
  if (name == "dirichlet") return WeightScheme::dirichlet;
  if (name == "multinomial") return WeightScheme::multinomial;
  if (name == "equal") return WeightScheme::equal;
  throw InvalidArgument("unknown weight scheme '" + std::string(name) + "'");
}

WeightVector::WeightVector(std::vector<double> weights, WeightScheme scheme)
    : weights_(std::move(weights)), scheme_(scheme) {
  require_positive(weights_.size(), "WeightVector");
  for (double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw InvalidArgument("WeightVector: weights must be finite and non-negative");
    }
  }
  double total = sum_of(weights_);
  if (std::abs(total - 1.0) > kSumTolerance) {
    if (!(total > 0.0)) {
      throw InvalidArgument("WeightVector: weights sum to zero");
    }
    for (double& w : weights_) {
      w /= total;
    }
    // Summation rounding grows with n; anything beyond that is a bug.
    total = sum_of(weights_);
    const double slack = 4.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(weights_.size());
    if (std::abs(total - 1.0) > kSumTolerance + slack) {
      throw InternalError("WeightVector: renormalization failed");
    }
  }
}

WeightVector draw_dirichlet(std::size_t n, RandomStream& rng) {
  require_positive(n, "draw_dirichlet");
  std::vector<double> w(n);
  double total = 0.0;
  for (double& wi : w) {
    wi = rng.exponential();
    total += wi;
  }
  for (double& wi : w) {
    wi /= total;
  }
  return WeightVector(std::move(w), WeightScheme::dirichlet);
}

WeightVector draw_multinomial(std::size_t n, RandomStream& rng) {
  require_positive(n, "draw_multinomial");
  std::vector<double> counts(n, 0.0);
  // Cells are equiprobable, so the categorical draw is a uniform index.
  for (std::size_t k = 0; k < n; ++k) {
    counts[rng.uniform_index(n)] += 1.0;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  for (double& c : counts) {
    c *= inv_n;
  }
  return WeightVector(std::move(counts), WeightScheme::multinomial);
}

WeightVector equal_weights(std::size_t n) {
  require_positive(n, "equal_weights");
  return WeightVector(std::vector<double>(n, 1.0 / static_cast<double>(n)), WeightScheme::equal);
}

WeightVector draw_weights(WeightScheme scheme, std::size_t n, RandomStream& rng) {
  switch (scheme) {
    case WeightScheme::dirichlet: return draw_dirichlet(n, rng);
    case WeightScheme::multinomial: return draw_multinomial(n, rng);
    case WeightScheme::equal: return equal_weights(n);
  }
  throw InternalError("draw_weights: unhandled scheme");
}

double weight_dispersion(std::span<const double> w) {
  if (w.empty()) {
    throw InvalidArgument("weight_dispersion: empty weight vector");
  }
  const double n = static_cast<double>(w.size());
  double acc = 0.0;
  for (double wi : w) {
    const double d = n * wi - 1.0;
    acc += d * d;
  }
  return acc / n;
}

}  // namespace orthoboot
