#pragma once

#include <cstddef>
#include <span>

#include "orthoboot/dataset.hpp"
#include "orthoboot/nuisance.hpp"
#include "orthoboot/random.hpp"

namespace orthoboot {

/// Partially linear design: Y = theta0 Z + g0(X) + U, Z | X ~ Bernoulli(e0(X)),
/// X ~ N(0, Sigma) with Sigma(i, j) = 0.8^|i-j| / 4.
struct PlmConfig {
  std::size_t n = 500;
  std::size_t q = 5;
  double theta0 = 3.0;

  void validate() const;
};

/// Sigma(i, j) = 0.8^|i-j| / 4, row-major q x q.
CovariateMatrix plm_covariance(std::size_t q);

/// g0(x) = x1 + sin(x2 + x3) + cos(x3) + |x4| + xq (1-based indices).
double plm_g0(std::span<const double> x);

/// e0(x) = expit(sum_j xj) / 2 + 1/5, always in (0.2, 0.7).
double plm_e0(std::span<const double> x);

Dataset simulate_plm(const PlmConfig& cfg, RandomStream& rng);

/// Y = theta0 Z + X + U, Z = sin X + V with X, U, V iid N(0, 1).
Dataset simulate_kernel_model(std::size_t n, RandomStream& rng, double theta0 = 3.0);

/// True nuisance functions of the partially linear design, as predictors of x.
Predictor plm_true_e();
Predictor plm_true_ky(double theta0 = 3.0);
/// mu0(z, x) = theta0 z + g0(x) evaluated at a fixed treatment arm.
Predictor plm_true_mu(double theta0, double arm);

/// True conditional means of the kernel design: E(Z|X) = sin X, E(Y|X) = theta0 sin X + X.
Predictor kernel_true_e();
Predictor kernel_true_ky(double theta0 = 3.0);

}  // namespace orthoboot
